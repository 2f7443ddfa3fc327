class OracleTooLarge(OverflowError):
    def __init__(self, leaves: int, limit: int):
        self.leaves = leaves
        self.limit = limit
        super().__init__(
            f"expectimax tree has {leaves} leaves, over the limit of {limit}"
        )
