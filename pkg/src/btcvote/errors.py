class BtcVoteError(Exception):
    pass


class CryptoError(BtcVoteError):
    pass


class PlaintextTooLarge(CryptoError):
    def __init__(self):
        super().__init__("plaintext too large")


class DecryptionError(CryptoError):
    def __init__(self, msg="not addressed to this key"):
        super().__init__(msg)


class ThresholdError(BtcVoteError):
    pass


class DkgAbort(ThresholdError):
    def __init__(self, culprit: int, msg: str = "share failed Feldman verification"):
        super().__init__(f"{msg} (dealer {culprit})")
        self.culprit = culprit


class LedgerError(BtcVoteError):
    pass


class ProtocolError(BtcVoteError):
    pass


class RegistrationError(ProtocolError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class CosignRefusal(ProtocolError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ShuffleAbort(ProtocolError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ConfigError(BtcVoteError):
    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field
