"""Exception hierarchy shared by all gridlab modules."""


class ContractError(ValueError):
    """An input violates an operation's precondition."""


class SizeError(ContractError):
    """A requested enumeration exceeds its documented size bound."""


class DomainError(ContractError):
    """A value lies outside the domain a strategy or measure accepts."""
