#pragma once

// Interpreter golden cases. Expected outcomes come from an independent
// interpreter (tests/oracles/grid_golden.py).

#include <cstddef>

namespace golden {

struct GridCase {
  const char* name;
  const char* program;
  const char* rows;  // '/'-separated; '#' wall, digit marker count
  int x, y;
  char dir;
  std::size_t budget;
  const char* status;  // ok, crash, timeout
  const char* reason;
  std::size_t steps;
  const char* final_rows;
  int fx, fy;
  char fdir;
};

inline constexpr GridCase kGridCases[] = {
    {"corridor", "while frontIsClear { move }", ".....", 0, 0, 'E', 500, "ok", "", 9, ".....", 4, 0, 'E'},
    {"empty program", "", "../..", 0, 0, 'N', 500, "ok", "", 0, "../..", 0, 0, 'N'},
    {"single move", "move", "....", 1, 0, 'E', 500, "ok", "", 1, "....", 2, 0, 'E'},
    {"move into wall", "move", ".#.", 0, 0, 'E', 500, "crash", "wall", 1, ".#.", 0, 0, 'E'},
    {"move off grid north", "move", ".../...", 1, 0, 'N', 500, "crash", "wall", 1, ".../...", 1, 0, 'N'},
    {"move north", "move", ".../...", 1, 1, 'N', 500, "ok", "", 1, ".../...", 1, 0, 'N'},
    {"turn left", "turnLeft", ".", 0, 0, 'N', 500, "ok", "", 1, ".", 0, 0, 'W'},
    {"turn right twice", "turnRight turnRight", ".", 0, 0, 'E', 500, "ok", "", 2, ".", 0, 0, 'W'},
    {"full turn", "repeat 4 { turnLeft }", ".", 0, 0, 'S', 500, "ok", "", 4, ".", 0, 0, 'S'},
    {"put marker", "putMarker", "...", 2, 0, 'W', 500, "ok", "", 1, "..1", 2, 0, 'W'},
    {"put to cap", "repeat 9 { putMarker }", ".", 0, 0, 'E', 500, "ok", "", 9, "9", 0, 0, 'E'},
    {"put past cap", "putMarker", "9", 0, 0, 'E', 500, "crash", "marker cap", 1, "9", 0, 0, 'E'},
    {"pick marker", "pickMarker", "3.", 0, 0, 'E', 500, "ok", "", 1, "2.", 0, 0, 'E'},
    {"pick from empty", "pickMarker", ".", 0, 0, 'E', 500, "crash", "no marker", 1, ".", 0, 0, 'E'},
    {"repeat move", "repeat 3 { move }", ".....", 0, 0, 'E', 500, "ok", "", 3, ".....", 3, 0, 'E'},
    {"repeat crash", "repeat 5 { move }", "....", 0, 0, 'E', 500, "crash", "wall", 4, "....", 3, 0, 'E'},
    {"if clear", "if frontIsClear { move } else { turnLeft }", "../..", 0, 0, 'E', 500, "ok", "", 2, "../..", 1, 0, 'E'},
    {"if blocked else", "if frontIsClear { move } else { turnLeft }", ".#/..", 0, 0, 'E', 500, "ok", "", 2, ".#/..", 0, 0, 'N'},
    {"if without else false", "if markersPresent { pickMarker }", "..", 0, 0, 'E', 500, "ok", "", 1, "..", 0, 0, 'E'},
    {"not markers", "if not markersPresent { putMarker }", "..", 0, 0, 'E', 500, "ok", "", 2, "1.", 0, 0, 'E'},
    {"double negation", "if not not frontIsClear { move }", "...", 0, 0, 'E', 500, "ok", "", 2, "...", 1, 0, 'E'},
    {"drain pile", "while markersPresent { pickMarker }", "4.", 0, 0, 'E', 500, "ok", "", 9, "..", 0, 0, 'E'},
    {"while false", "while markersPresent { pickMarker }", "..", 0, 0, 'E', 500, "ok", "", 1, "..", 0, 0, 'E'},
    {"spin timeout", "while frontIsClear { turnLeft }", ".../.../...", 1, 1, 'N', 500, "timeout", "", 500, ".../.../...", 1, 1, 'S'},
    {"tight budget", "repeat 3 { move }", ".....", 0, 0, 'E', 2, "timeout", "", 2, ".....", 2, 0, 'E'},
    {"exact budget", "repeat 3 { move }", ".....", 0, 0, 'E', 3, "ok", "", 3, ".....", 3, 0, 'E'},
    {"wall follow", "repeat 2 { while frontIsClear { move } turnRight }", "..../..../....", 0, 0, 'E', 500, "ok", "", 14, "..../..../....", 3, 2, 'W'},
    {"mark trail", "while frontIsClear { putMarker move } putMarker", "..../#...", 0, 0, 'E', 500, "ok", "", 11, "1111/#...", 3, 0, 'E'},
    {"nested if", "repeat 3 { if markersPresent { pickMarker } else { putMarker } move }", "2.1.", 0, 0, 'E', 500, "ok", "", 9, "11..", 3, 0, 'E'},
    {"around wall", "turnRight move turnLeft repeat 2 { move } turnLeft move", ".../.#./...", 0, 0, 'E', 500, "crash", "wall", 4, ".../.#./...", 0, 1, 'E'},
    {"wall column", "while not frontIsClear { turnRight } move", "#./.#", 0, 1, 'E', 500, "timeout", "", 500, "#./.#", 0, 1, 'W'},
};

}  // namespace golden
