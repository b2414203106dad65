"""Unit conversion constants and clock-string helpers.

Internal working units are SI throughout: metres, seconds, cubic metres per
second for flow, kilograms for tracer mass, mg/L for concentration.  Flows
cross module boundaries in L/s only where a value is user-facing.
"""

from __future__ import annotations

# Length
FT_TO_M = 0.3048
IN_TO_MM = 25.4

# Flow
GPM_TO_M3S = 6.30902e-5
LPS_TO_M3S = 1e-3

# Pressure head: metres of water column per psi
PSI_TO_M = 0.703070

# Hazen-Williams resistance, SI form:  h = HW_K * L / (C^HW_EXP * D^4.871) * Q^HW_EXP
# with L, D in metres and Q in m^3/s.
HW_K = 10.667
HW_EXP = 1.852
HW_DEXP = 4.871

SECONDS_PER_HOUR = 3600.0
SECONDS_PER_DAY = 86400.0


def parse_clock(text: str) -> float:
    """Parse 'HH:MM' (24-hour, HH may exceed 23 for multi-day) to seconds."""
    parts = text.strip().split(":")
    if len(parts) != 2:
        raise ValueError(f"bad clock string {text!r}, expected HH:MM")
    try:
        hours, minutes = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"bad clock string {text!r}, expected HH:MM") from None
    if not 0 <= minutes < 60 or hours < 0:
        raise ValueError(f"bad clock string {text!r}, minutes must be 00-59")
    return hours * 3600.0 + minutes * 60.0


def format_clock(seconds: float) -> str:
    """Render seconds-from-midnight as 'HH:MM' (rounded to the minute)."""
    total_min = int(round(seconds / 60.0))
    return f"{total_min // 60:02d}:{total_min % 60:02d}"
