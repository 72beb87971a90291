from .device import DeviceSourceUnit, emit_all_device_sources, emit_device_source
from .host import emit_host_program, static_host_trace

__all__ = ["DeviceSourceUnit", "emit_all_device_sources", "emit_device_source", "emit_host_program", "static_host_trace"]
