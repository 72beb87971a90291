from ..config import DeviceConfig
from .cb import CircularBuffer, ProtocolError, cb_transition
from .device import (
    DeadlockEntry,
    DeadlockError,
    DeadlockReport,
    DeviceError,
    DeviceState,
    EngineState,
    StepBudgetExceeded,
    run_device,
)
from .interp import ExecutionError, Interpreter, interpret_std
from .runtime import DeviceRuntime, HostProgram, HostRun, HostRuntimeError, ReplayResult, RuntimeCall, replay_host, run_host
from .tiles import exec_compute_op

__all__ = [
    "DeviceConfig", "CircularBuffer", "ProtocolError", "cb_transition", "DeadlockEntry",
    "DeadlockError", "DeadlockReport", "DeviceError", "DeviceState", "EngineState",
    "StepBudgetExceeded", "run_device", "ExecutionError", "Interpreter", "interpret_std",
    "DeviceRuntime", "HostProgram", "HostRun", "HostRuntimeError", "ReplayResult", "RuntimeCall",
    "replay_host", "run_host", "exec_compute_op",
]
