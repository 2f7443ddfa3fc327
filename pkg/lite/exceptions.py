class ImpossibleObservation(ArithmeticError):
    """The (v, o) branch has zero probability under the current belief."""


class BackupTooLarge(OverflowError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(
            f"exact backup would generate {count} alpha-vectors (cap {cap})"
        )
