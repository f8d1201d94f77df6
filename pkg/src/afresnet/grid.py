"""The 30-entry reference benchmark grid and its published trainable
parameter counts, used as golden data by ``afresnet params --table`` and
the verification suite. Entries are ordered by parameter count."""

REFERENCE_GRID: tuple[tuple[str, int], ...] = (
    ("8; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 3658),
    ("32; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 4258),
    ("8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7026),
    ("8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7026),
    ("32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]", 7626),
    ("32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 7626),
    ("8; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 10522),
    ("32; cna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 11122),
    ("8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 13762),
    ("32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 2, 2, 2, 2, 2, 2]", 14362),
    ("8; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 20754),
    ("32; cnacna; [4, 4, 8, 8, 16, 16, 20]; [2, 3, 4, 5, 4, 3, 2]", 21354),
    ("32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64202),
    ("32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [1, 1, 1, 1, 1, 1, 1]", 64522),
    ("32; cnacna; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 172154),
    ("32; ncnacn; [4, 8, 12, 20, 32, 52, 84]; [2, 3, 4, 5, 4, 3, 2]", 173314),
    ("8; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 176450),
    ("32; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 177050),
    ("8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 439594),
    ("8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 439594),
    ("32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 440194),
    ("32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]", 440194),
    ("8; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525050),
    ("32; cna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 525650),
    ("8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 965882),
    ("32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 2, 2, 2, 2, 2, 2]", 966482),
    ("8; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1136794),
    ("32; cnacna; [4, 8, 16, 32, 64, 128, 256]; [2, 3, 4, 5, 4, 3, 2]", 1137394),
    ("ResNet18", 3843138),
    ("ResNet34", 7217474),
)

GRAMMAR_ENTRIES = REFERENCE_GRID[:28]
PRESET_ENTRIES = REFERENCE_GRID[28:]
EXPECTED_COUNTS = dict(REFERENCE_GRID)
