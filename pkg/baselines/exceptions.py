from posg.exceptions import ModelError


class NotZeroSum(ModelError):
    pass


class AgentSpecError(ValueError):
    """Agent specification string that does not parse or does not fit the game."""
