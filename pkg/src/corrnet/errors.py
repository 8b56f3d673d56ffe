"""Exception types raised across the pipeline.

Two families matter to callers: ``DataError`` (bad or insufficient input)
and ``NumericError`` (degenerate statistics). The CLI maps them to distinct
exit codes.
"""


class CorrnetError(Exception):
    pass


class DataError(CorrnetError):
    pass


class NumericError(CorrnetError):
    pass


# market_data
class MalformedCsv(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class EmptySeries(DataError):
    pass


class HttpFailure(DataError):
    def __init__(self, status, url):
        super().__init__(f"HTTP {status} from {url}")
        self.status = status
        self.url = url


class MalformedResponse(DataError):
    pass


class InsufficientCoverage(DataError):
    def __init__(self, offenders):
        # offenders: list of (symbol, earliest date)
        self.offenders = list(offenders)
        names = ", ".join(f"{s} (starts {d.isoformat()})" for s, d in self.offenders)
        super().__init__(f"series start after window start: {names}")


class TooFewAssets(DataError):
    pass


# returns
class TooShort(DataError):
    pass


class TooFewRows(DataError):
    pass


# rank_stats
class NonFinite(NumericError):
    pass


class DegenerateInput(NumericError):
    pass


class TooFewObservations(NumericError):
    def __init__(self, pair, n):
        self.pair = pair
        self.n = n
        super().__init__(f"pair {pair[0]} {pair[1]} has only {n} complete observations (need >= 3)")


# network
class NoPositiveEdges(NumericError):
    pass


class NeverSplits(NumericError):
    pass


class DisconnectedNetwork(NumericError):
    pass


class NodeSetMismatch(DataError):
    pass


class DegenerateLabeling(DataError):
    pass


# layout / render
class EmptyNetwork(DataError):
    pass


class MissingPosition(DataError):
    pass
