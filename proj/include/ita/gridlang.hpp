#pragma once

// Mini-Karel: a robot on a walled grid with marker piles, a small
// imperative language driving it, and the execution-based spec filter used
// for program synthesis from input/output examples.

#include <array>
#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ita/augment.hpp"
#include "ita/rng.hpp"
#include "ita/tokens.hpp"

namespace ita::gridlang {

// ---------------------------------------------------------------------------
// Programs

enum class Op : std::uint8_t { kMove, kTurnLeft, kTurnRight, kPutMarker, kPickMarker, kRepeat, kIf, kWhile };

struct Cond {
  enum class Kind : std::uint8_t { kFrontIsClear, kMarkersPresent };
  Kind kind = Kind::kFrontIsClear;
  int negations = 0;  // number of leading `not`

  bool operator==(const Cond&) const = default;
};

struct Stmt {
  Op op = Op::kMove;
  int count = 0;  // repeat only
  Cond cond;      // if / while
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;

  bool operator==(const Stmt&) const = default;
};

struct Program {
  std::vector<Stmt> body;

  bool operator==(const Program&) const = default;
};

struct ProgramLimits {
  int max_depth = 4;          // nesting of statement blocks; top level is 1
  std::size_t max_len = 40;   // tokens
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at token " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Word alphabet of the language; digits 2..9 are separate symbols.
const Alphabet& alphabet();

/// Whitespace-separated source text. Throws ParseError.
Program parse(std::string_view text, const ProgramLimits& limits = {});
/// Token ids over alphabet(). Throws ParseError.
Program parse(const TokenSeq& tokens, const ProgramLimits& limits = {});

std::string pretty_print(const Program& p);
TokenSeq to_tokens(const Program& p);
int depth(const Program& p);
std::size_t token_count(const Program& p);

// ---------------------------------------------------------------------------
// Grids

enum class Dir : std::uint8_t { kNorth, kEast, kSouth, kWest };

inline constexpr int kMaxSide = 16;
inline constexpr int kMarkerCap = 9;

/// y grows southwards; north is y - 1.
struct GridState {
  int width = 1;
  int height = 1;
  std::bitset<kMaxSide * kMaxSide> walls;
  int x = 0;
  int y = 0;
  Dir dir = Dir::kEast;
  std::array<std::uint8_t, kMaxSide * kMaxSide> markers{};

  static GridState empty(int width, int height);
  static std::size_t cell(int x, int y) { return static_cast<std::size_t>(y) * kMaxSide + x; }
  bool inside(int cx, int cy) const { return cx >= 0 && cy >= 0 && cx < width && cy < height; }
  bool wall(int cx, int cy) const { return walls[cell(cx, cy)]; }
  int marker(int cx, int cy) const { return markers[cell(cx, cy)]; }
  void validate() const;
  bool operator==(const GridState&) const = default;
};

struct ExecOutcome {
  enum class Status : std::uint8_t { kOk, kCrash, kTimeout };
  Status status = Status::kOk;
  GridState final;
  std::string reason;  // crash reason
  std::size_t steps = 0;

  bool ok() const { return status == Status::kOk; }
};

inline constexpr std::size_t kDefaultStepBudget = 500;

/// Each primitive action and each condition evaluation costs one step.
ExecOutcome execute(const Program& p, const GridState& g, std::size_t step_budget = kDefaultStepBudget);

// ---------------------------------------------------------------------------
// Tasks

struct IOPair {
  GridState in;
  GridState out;
};

/// The examples a synthesiser (and its filter) may look at.
struct GivenSpec {
  std::vector<IOPair> given;
};

struct Task {
  GivenSpec spec;
  std::vector<IOPair> heldout;
  Program gold;
};

bool satisfies(const Program& p, const std::vector<IOPair>& pairs,
               std::size_t step_budget = kDefaultStepBudget);

/// Passes iff the target parses and reproduces every given pair exactly.
/// Never sees held-out pairs: its input type has none.
class SpecFilter final : public TargetFilter<GivenSpec> {
 public:
  explicit SpecFilter(ProgramLimits limits = {}, std::size_t step_budget = kDefaultStepBudget)
      : limits_(limits), budget_(step_budget) {}
  FilterVerdict check(const GivenSpec& spec, const TokenSeq& program) const override;

 private:
  ProgramLimits limits_;
  std::size_t budget_;
};

struct GridConfig {
  int min_side = 4;
  int max_side = 8;
  double wall_density = 0.1;
  double marker_density = 0.1;
  int max_initial_markers = 3;
  std::size_t n_given = 5;
  std::size_t n_heldout = 1;
};

struct ProgramConfig {
  ProgramLimits limits{3, 24};
  int max_statements = 4;       // per block at top level
  int max_body_statements = 2;  // inside control blocks
  double p_control = 0.3;       // chance a statement is repeat / if / while
  std::size_t step_budget = kDefaultStepBudget;
  std::size_t grid_attempts = 20;       // grid sets tried per program
  std::size_t global_attempts = 200000; // programs tried overall
};

Program random_program(Rng& rng, const ProgramConfig& cfg);
GridState random_grid(Rng& rng, int width, int height, const GridConfig& cfg);

/// Deterministic in `seed`. Rejects programs that crash or time out on any
/// grid, that leave every grid unchanged, and exact duplicates.
std::vector<Task> generate_tasks(std::size_t n, const GridConfig& grid_cfg,
                                 const ProgramConfig& program_cfg, SeedStream seed);

/// Small discrete code summarising how the given pairs change the world:
/// heading change, displacement in the robot frame, marker change sign.
std::uint32_t featurize(const GivenSpec& spec);
inline constexpr std::uint32_t kNumFeatures = 5 * 19 * 4;

// ---------------------------------------------------------------------------
// Evaluation

/// Fraction of tasks whose single emitted program (first of L attempts that
/// passes the given pairs, else the first attempt) passes both the given and
/// the held-out pairs.
template <typename Model>
  requires Generator<Model, GivenSpec>
double top1_generalization(const Model& model, const std::vector<Task>& tasks, std::size_t L,
                           SeedStream seed, std::size_t workers = 1,
                           std::size_t step_budget = kDefaultStepBudget) {
  if (tasks.empty()) return 0.0;
  SpecFilter filter({}, step_budget);
  std::vector<char> hit(tasks.size(), 0);
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    auto out = predict<GivenSpec>(tasks[i].spec, model, filter, 1, L, seed.child(i));
    const TokenSeq& prog = out.front();
    if (!filter.check(tasks[i].spec, prog).pass) return;
    Program p = parse(prog);
    hit[i] = satisfies(p, tasks[i].heldout, step_budget) ? 1 : 0;
  });
  std::size_t n = 0;
  for (char h : hit) n += h;
  return static_cast<double>(n) / static_cast<double>(tasks.size());
}

// ---------------------------------------------------------------------------
// I/O (one JSON object per line)

void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks);
std::vector<Task> read_tasks_jsonl(std::istream& in);
/// Input-only records {"given": [...]} (an unlabeled pool).
void write_specs_jsonl(std::ostream& out, const std::vector<GivenSpec>& specs);
std::vector<GivenSpec> read_specs_jsonl(std::istream& in);

}  // namespace ita::gridlang
