"""Exception hierarchy shared by every udec module."""


class UdecError(Exception):
    """Base class for simulator, codec and tooling errors."""


class RangeError(UdecError, ValueError):
    """A field value does not fit its encoding."""


class IllegalInstruction(UdecError):
    def __init__(self, word, msg=None, pc=None):
        self.word = word
        self.pc = pc
        text = msg or "illegal instruction"
        where = f" at pc={pc:#x}" if pc is not None else ""
        super().__init__(f"{text}: {word:#010x}{where}")


class MacroWithoutUdec(IllegalInstruction):
    """A macro-instruction reached a machine with no micro-decoder (or no ROM)."""


# -- microcode codec / ROM errors

class UnknownFu(UdecError, ValueError):
    pass


class UnknownOpcode(UdecError, ValueError):
    pass


class ParseError(UdecError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        loc = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{loc}{msg}")


class SequenceTooLong(ParseError):
    pass


class DuplicateIdx(ParseError):
    pass


class ImmOutOfRange(ParseError):
    pass


class IdxOutOfRange(ParseError, RangeError):
    pass


class RomFormatError(UdecError):
    pass


class BadMagic(RomFormatError):
    pass


class VersionMismatch(RomFormatError):
    pass


class TruncatedFile(RomFormatError):
    pass


# -- execution errors

class MemoryFault(UdecError):
    def __init__(self, addr, size, msg="access fault"):
        self.addr, self.size = addr, size
        super().__init__(f"{msg}: {size}-byte access at {addr:#x}")


class LimitExceeded(UdecError):
    pass


class EmptySequence(UdecError):
    pass


class StateMismatch(UdecError):
    pass
