"""Built-in 8x8 bitmap font covering printable ASCII 0x20..0x7E.

Hand-drawn for this project and placed in the public domain. Each glyph
is 8 rows of 8 cells; '#' marks a set pixel. Characters outside the
printable range render as '?'.
"""

_FONT_SRC = """
20
........
........
........
........
........
........
........
........
21
..#.....
..#.....
..#.....
..#.....
..#.....
........
..#.....
........
22
.#.#....
.#.#....
.#.#....
........
........
........
........
........
23
.#.#....
.#.#....
#####...
.#.#....
#####...
.#.#....
.#.#....
........
24
..#.....
.####...
#.#.....
.###....
..#.#...
####....
..#.....
........
25
##...#..
##..#...
...#....
..#.....
.#......
#...##..
....##..
........
26
.##.....
#..#....
#..#....
.##.....
#.#.#...
#..#....
.##.#...
........
27
..#.....
..#.....
........
........
........
........
........
........
28
...#....
..#.....
.#......
.#......
.#......
..#.....
...#....
........
29
.#......
..#.....
...#....
...#....
...#....
..#.....
.#......
........
2A
........
..#.....
#.#.#...
.###....
#.#.#...
..#.....
........
........
2B
........
..#.....
..#.....
#####...
..#.....
..#.....
........
........
2C
........
........
........
........
........
........
..#.....
.#......
2D
........
........
........
#####...
........
........
........
........
2E
........
........
........
........
........
........
..#.....
........
2F
.....#..
....#...
...#....
..#.....
.#......
#.......
........
........
30
.###....
#...#...
#..##...
#.#.#...
##..#...
#...#...
.###....
........
31
..#.....
.##.....
..#.....
..#.....
..#.....
..#.....
.###....
........
32
.###....
#...#...
....#...
...#....
..#.....
.#......
#####...
........
33
.###....
#...#...
....#...
..##....
....#...
#...#...
.###....
........
34
...#....
..##....
.#.#....
#..#....
#####...
...#....
...#....
........
35
#####...
#.......
####....
....#...
....#...
#...#...
.###....
........
36
.###....
#.......
#.......
####....
#...#...
#...#...
.###....
........
37
#####...
....#...
...#....
..#.....
.#......
.#......
.#......
........
38
.###....
#...#...
#...#...
.###....
#...#...
#...#...
.###....
........
39
.###....
#...#...
#...#...
.####...
....#...
....#...
.###....
........
3A
........
........
..#.....
........
........
..#.....
........
........
3B
........
........
..#.....
........
........
..#.....
.#......
........
3C
...#....
..#.....
.#......
#.......
.#......
..#.....
...#....
........
3D
........
........
#####...
........
#####...
........
........
........
3E
.#......
..#.....
...#....
....#...
...#....
..#.....
.#......
........
3F
.###....
#...#...
....#...
...#....
..#.....
........
..#.....
........
40
.###....
#...#...
#.###...
#.#.#...
#.###...
#.......
.###....
........
41
.###....
#...#...
#...#...
#####...
#...#...
#...#...
#...#...
........
42
####....
#...#...
#...#...
####....
#...#...
#...#...
####....
........
43
.###....
#...#...
#.......
#.......
#.......
#...#...
.###....
........
44
####....
#...#...
#...#...
#...#...
#...#...
#...#...
####....
........
45
#####...
#.......
#.......
####....
#.......
#.......
#####...
........
46
#####...
#.......
#.......
####....
#.......
#.......
#.......
........
47
.###....
#...#...
#.......
#.###...
#...#...
#...#...
.####...
........
48
#...#...
#...#...
#...#...
#####...
#...#...
#...#...
#...#...
........
49
.###....
..#.....
..#.....
..#.....
..#.....
..#.....
.###....
........
4A
..###...
...#....
...#....
...#....
...#....
#..#....
.##.....
........
4B
#...#...
#..#....
#.#.....
##......
#.#.....
#..#....
#...#...
........
4C
#.......
#.......
#.......
#.......
#.......
#.......
#####...
........
4D
#...#...
##.##...
#.#.#...
#.#.#...
#...#...
#...#...
#...#...
........
4E
#...#...
##..#...
#.#.#...
#..##...
#...#...
#...#...
#...#...
........
4F
.###....
#...#...
#...#...
#...#...
#...#...
#...#...
.###....
........
50
####....
#...#...
#...#...
####....
#.......
#.......
#.......
........
51
.###....
#...#...
#...#...
#...#...
#.#.#...
#..#....
.##.#...
........
52
####....
#...#...
#...#...
####....
#.#.....
#..#....
#...#...
........
53
.####...
#.......
#.......
.###....
....#...
....#...
####....
........
54
#####...
..#.....
..#.....
..#.....
..#.....
..#.....
..#.....
........
55
#...#...
#...#...
#...#...
#...#...
#...#...
#...#...
.###....
........
56
#...#...
#...#...
#...#...
#...#...
#...#...
.#.#....
..#.....
........
57
#...#...
#...#...
#...#...
#.#.#...
#.#.#...
##.##...
#...#...
........
58
#...#...
#...#...
.#.#....
..#.....
.#.#....
#...#...
#...#...
........
59
#...#...
#...#...
.#.#....
..#.....
..#.....
..#.....
..#.....
........
5A
#####...
....#...
...#....
..#.....
.#......
#.......
#####...
........
5B
.###....
.#......
.#......
.#......
.#......
.#......
.###....
........
5C
#.......
.#......
..#.....
...#....
....#...
.....#..
........
........
5D
.###....
...#....
...#....
...#....
...#....
...#....
.###....
........
5E
..#.....
.#.#....
#...#...
........
........
........
........
........
5F
........
........
........
........
........
........
........
#####...
60
.#......
..#.....
........
........
........
........
........
........
61
........
........
.###....
....#...
.####...
#...#...
.####...
........
62
#.......
#.......
####....
#...#...
#...#...
#...#...
####....
........
63
........
........
.###....
#.......
#.......
#...#...
.###....
........
64
....#...
....#...
.####...
#...#...
#...#...
#...#...
.####...
........
65
........
........
.###....
#...#...
#####...
#.......
.###....
........
66
..##....
.#......
####....
.#......
.#......
.#......
.#......
........
67
........
........
.####...
#...#...
#...#...
.####...
....#...
.###....
68
#.......
#.......
####....
#...#...
#...#...
#...#...
#...#...
........
69
..#.....
........
.##.....
..#.....
..#.....
..#.....
.###....
........
6A
...#....
........
..##....
...#....
...#....
...#....
#..#....
.##.....
6B
#.......
#.......
#..#....
#.#.....
##......
#.#.....
#..#....
........
6C
.##.....
..#.....
..#.....
..#.....
..#.....
..#.....
.###....
........
6D
........
........
##.#....
#.#.#...
#.#.#...
#.#.#...
#.#.#...
........
6E
........
........
####....
#...#...
#...#...
#...#...
#...#...
........
6F
........
........
.###....
#...#...
#...#...
#...#...
.###....
........
70
........
........
####....
#...#...
#...#...
####....
#.......
#.......
71
........
........
.####...
#...#...
#...#...
.####...
....#...
....#...
72
........
........
#.##....
.#..#...
.#......
.#......
.#......
........
73
........
........
.####...
#.......
.###....
....#...
####....
........
74
.#......
.#......
####....
.#......
.#......
.#..#...
..##....
........
75
........
........
#...#...
#...#...
#...#...
#...#...
.####...
........
76
........
........
#...#...
#...#...
#...#...
.#.#....
..#.....
........
77
........
........
#...#...
#...#...
#.#.#...
#.#.#...
.#.#....
........
78
........
........
#...#...
.#.#....
..#.....
.#.#....
#...#...
........
79
........
........
#...#...
#...#...
#...#...
.####...
....#...
.###....
7A
........
........
#####...
...#....
..#.....
.#......
#####...
........
7B
...##...
..#.....
..#.....
.#......
..#.....
..#.....
...##...
........
7C
..#.....
..#.....
..#.....
..#.....
..#.....
..#.....
..#.....
........
7D
.##.....
..#.....
..#.....
...#....
..#.....
..#.....
.##.....
........
7E
........
........
........
.##..#..
#..##...
........
........
........
"""


def _parse_font(src):
    glyphs = {}
    lines = [ln for ln in src.splitlines() if ln]
    i = 0
    while i < len(lines):
        code = int(lines[i], 16)
        rows = []
        for row in lines[i + 1:i + 9]:
            bits = 0
            for j, ch in enumerate(row):
                if ch == "#":
                    bits |= 0x80 >> j
            rows.append(bits)
        glyphs[code] = tuple(rows)
        i += 9
    return glyphs


GLYPHS = _parse_font(_FONT_SRC)

_FALLBACK = GLYPHS[0x3F]  # '?'


def glyph_rows(char):
    """8 row bytes for a character (MSB = leftmost pixel)."""
    return GLYPHS.get(ord(char), _FALLBACK)
