"""
Built-in shop data: the default product routings and the reference shop.

Workstation ids are 0-based (WS1 is 0). The reference shop fixes the
processing times of every product operation and the transfer times between
the 8 nodes S, WS1..WS5, CH1, CH2.
"""

# Eligible workstations for each operation of P1..P4.
DEFAULT_ROUTINGS = (
    ((0, 2), (2, 3), (1, 2)),  # P1: WS1/WS3 -> WS3/WS4 -> WS2/WS3
    ((0, 3), (0, 3), (1, 2)),  # P2: WS1/WS4 -> WS1/WS4 -> WS2/WS3
    ((3, 4), (0, 4), (1, 2)),  # P3: WS4/WS5 -> WS1/WS5 -> WS2/WS3
    ((0, 3), (0, 1), (2, 3)),  # P4: WS1/WS4 -> WS1/WS2 -> WS3/WS4
)
DEFAULT_N_WORKSTATIONS = 5
DEFAULT_N_CHARGERS = 2

REFERENCE_PROCESSING_TIMES = (
    ({0: 21, 2: 45}, {2: 50, 3: 35}, {1: 32, 2: 36}),
    ({0: 33, 3: 48}, {0: 24, 3: 46}, {1: 18, 2: 11}),
    ({3: 12, 4: 46}, {0: 45, 4: 15}, {1: 19, 2: 17}),
    ({0: 36, 3: 25}, {0: 30, 1: 18}, {2: 41, 3: 39}),
)

#            S  WS1 WS2 WS3 WS4 WS5 CH1 CH2
REFERENCE_LAYOUT = (
    (0, 14, 23, 28, 12, 15, 16, 13),
    (14, 0, 27, 24, 14, 28, 19, 24),
    (23, 27, 0, 12, 10, 23, 16, 12),
    (28, 24, 12, 0, 23, 12, 17, 28),
    (12, 14, 10, 23, 0, 21, 18, 28),
    (15, 28, 23, 12, 21, 0, 10, 30),
    (16, 19, 16, 17, 18, 10, 0, 26),
    (13, 24, 12, 28, 28, 30, 26, 0),
)

PRESETS = ("random", "reference")
