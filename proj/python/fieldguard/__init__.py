"""Deterministic detect-and-respond protection-agent simulator for legacy
SCADA field networks.

The heavy lifting lives in the C++ extension; this package re-exports the
telegram codec, the sealed-channel primitives and the scenario runners.
"""

from ._core import (
    Telegram,
    __version__,
    checksum,
    control,
    decode_telegram,
    derive_channel_key,
    empty_command,
    encode_telegram,
    flag_switch,
    interrogation,
    open_message,
    payload_schema,
    replace,
    run_preset,
    run_scenario_file,
    run_scenario_text,
    seal_message,
    set_point,
    validate_config,
)

__all__ = [
    "Telegram",
    "__version__",
    "checksum",
    "control",
    "decode_telegram",
    "derive_channel_key",
    "empty_command",
    "encode_telegram",
    "flag_switch",
    "interrogation",
    "open_message",
    "payload_schema",
    "replace",
    "run_preset",
    "run_scenario_file",
    "run_scenario_text",
    "seal_message",
    "set_point",
    "validate_config",
]
