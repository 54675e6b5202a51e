#include "ita/gridlang.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace ita::gridlang {

namespace {

constexpr std::string_view kMove = "move", kTurnLeft = "turnLeft", kTurnRight = "turnRight",
                           kPut = "putMarker", kPick = "pickMarker", kRepeat = "repeat", kIf = "if",
                           kElse = "else", kWhile = "while", kFront = "frontIsClear",
                           kMarkers = "markersPresent", kNot = "not", kOpen = "{", kClose = "}";

struct Lexeme {
  std::string text;
  std::size_t pos;
};

class Parser {
 public:
  Parser(std::vector<Lexeme> lex, const ProgramLimits& limits) : lex_(std::move(lex)), limits_(limits) {}

  Program run() {
    if (lex_.size() > limits_.max_len)
      throw ParseError("program longer than " + std::to_string(limits_.max_len) + " tokens",
                       limits_.max_len);
    Program p;
    p.body = block(1, /*top=*/true);
    if (i_ < lex_.size()) throw ParseError("trailing tokens after program", lex_[i_].pos);
    return p;
  }

 private:
  bool at_end() const { return i_ >= lex_.size(); }
  std::size_t pos() const { return at_end() ? lex_.size() : lex_[i_].pos; }
  const std::string& peek() const { return lex_[i_].text; }

  void expect(std::string_view what) {
    if (at_end()) throw ParseError("expected '" + std::string(what) + "' but reached end", pos());
    if (peek() != what)
      throw ParseError("expected '" + std::string(what) + "', got '" + peek() + "'", pos());
    ++i_;
  }

  std::vector<Stmt> block(int level, bool top) {
    if (level > limits_.max_depth)
      throw ParseError("nesting deeper than " + std::to_string(limits_.max_depth), pos());
    std::vector<Stmt> out;
    while (!at_end()) {
      if (peek() == kClose) {
        if (top) throw ParseError("unbalanced '}'", pos());
        return out;
      }
      out.push_back(statement(level));
    }
    if (!top) throw ParseError("unclosed block", pos());
    return out;
  }

  std::vector<Stmt> braced(int level) {
    expect(kOpen);
    if (!at_end() && peek() == kClose) throw ParseError("empty block", pos());
    auto body = block(level + 1, false);
    expect(kClose);
    return body;
  }

  Cond cond() {
    Cond c;
    while (!at_end() && peek() == kNot) {
      ++c.negations;
      ++i_;
    }
    if (at_end()) throw ParseError("expected condition but reached end", pos());
    if (peek() == kFront)
      c.kind = Cond::Kind::kFrontIsClear;
    else if (peek() == kMarkers)
      c.kind = Cond::Kind::kMarkersPresent;
    else
      throw ParseError("expected condition, got '" + peek() + "'", pos());
    ++i_;
    return c;
  }

  Stmt statement(int level) {
    Stmt s;
    const std::string w = peek();
    const std::size_t at = pos();
    ++i_;
    if (w == kMove) {
      s.op = Op::kMove;
    } else if (w == kTurnLeft) {
      s.op = Op::kTurnLeft;
    } else if (w == kTurnRight) {
      s.op = Op::kTurnRight;
    } else if (w == kPut) {
      s.op = Op::kPutMarker;
    } else if (w == kPick) {
      s.op = Op::kPickMarker;
    } else if (w == kRepeat) {
      s.op = Op::kRepeat;
      if (at_end()) throw ParseError("expected repeat count but reached end", pos());
      int n = 0;
      const auto& t = peek();
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
      if (ec != std::errc() || p != t.data() + t.size())
        throw ParseError("expected repeat count, got '" + t + "'", pos());
      if (n < 2 || n > 9) throw ParseError("repeat count " + t + " outside [2, 9]", pos());
      ++i_;
      s.count = n;
      s.body = braced(level);
    } else if (w == kIf) {
      s.op = Op::kIf;
      s.cond = cond();
      s.body = braced(level);
      if (!at_end() && peek() == kElse) {
        ++i_;
        s.has_else = true;
        s.else_body = braced(level);
      }
    } else if (w == kWhile) {
      s.op = Op::kWhile;
      s.cond = cond();
      s.body = braced(level);
    } else {
      throw ParseError("unexpected token '" + w + "'", at);
    }
    return s;
  }

  std::vector<Lexeme> lex_;
  ProgramLimits limits_;
  std::size_t i_ = 0;
};

void print_cond(std::ostream& out, const Cond& c) {
  for (int i = 0; i < c.negations; ++i) out << kNot << ' ';
  out << (c.kind == Cond::Kind::kFrontIsClear ? kFront : kMarkers);
}

void print_block(std::ostream& out, const std::vector<Stmt>& body, bool& first);

void print_stmt(std::ostream& out, const Stmt& s, bool& first) {
  auto word = [&](std::string_view w) {
    if (!first) out << ' ';
    out << w;
    first = false;
  };
  auto braced = [&](const std::vector<Stmt>& body) {
    word(kOpen);
    print_block(out, body, first);
    word(kClose);
  };
  switch (s.op) {
    case Op::kMove: word(kMove); break;
    case Op::kTurnLeft: word(kTurnLeft); break;
    case Op::kTurnRight: word(kTurnRight); break;
    case Op::kPutMarker: word(kPut); break;
    case Op::kPickMarker: word(kPick); break;
    case Op::kRepeat:
      word(kRepeat);
      word(std::to_string(s.count));
      braced(s.body);
      break;
    case Op::kIf:
    case Op::kWhile: {
      word(s.op == Op::kIf ? kIf : kWhile);
      std::ostringstream c;
      print_cond(c, s.cond);
      word(c.str());
      braced(s.body);
      if (s.has_else) {
        word(kElse);
        braced(s.else_body);
      }
      break;
    }
  }
}

void print_block(std::ostream& out, const std::vector<Stmt>& body, bool& first) {
  for (const auto& s : body) print_stmt(out, s, first);
}

int block_depth(const std::vector<Stmt>& body) {
  int d = 0;
  for (const auto& s : body) {
    int inner = std::max(block_depth(s.body), block_depth(s.else_body));
    bool control = s.op == Op::kRepeat || s.op == Op::kIf || s.op == Op::kWhile;
    d = std::max(d, control ? inner + 1 : 1);
  }
  return d;
}

}  // namespace

const Alphabet& alphabet() {
  static const Alphabet a({"move", "turnLeft", "turnRight", "putMarker", "pickMarker", "repeat", "2",
                           "3", "4", "5", "6", "7", "8", "9", "if", "else", "while", "frontIsClear",
                           "markersPresent", "not", "{", "}"});
  return a;
}

Program parse(std::string_view text, const ProgramLimits& limits) {
  std::vector<Lexeme> lex;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) lex.push_back({w, lex.size()});
  return Parser(std::move(lex), limits).run();
}

Program parse(const TokenSeq& tokens, const ProgramLimits& limits) {
  std::vector<Lexeme> lex;
  lex.reserve(tokens.size());
  const auto& a = alphabet();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= a.size()) throw ParseError("token id outside alphabet", i);
    lex.push_back({a.symbols()[tokens[i]], i});
  }
  return Parser(std::move(lex), limits).run();
}

std::string pretty_print(const Program& p) {
  std::ostringstream out;
  bool first = true;
  print_block(out, p.body, first);
  return out.str();
}

TokenSeq to_tokens(const Program& p) { return alphabet().encode_words(pretty_print(p)); }

int depth(const Program& p) { return block_depth(p.body); }

std::size_t token_count(const Program& p) { return to_tokens(p).size(); }

// ---------------------------------------------------------------------------

GridState GridState::empty(int width, int height) {
  GridState g;
  g.width = width;
  g.height = height;
  g.validate();
  return g;
}

void GridState::validate() const {
  if (width < 1 || height < 1 || width > kMaxSide || height > kMaxSide)
    throw std::invalid_argument("grid side must be in [1, 16]");
  if (!inside(x, y)) throw std::invalid_argument("robot outside the grid");
  if (wall(x, y)) throw std::invalid_argument("robot on a wall cell");
  for (int cy = 0; cy < kMaxSide; ++cy)
    for (int cx = 0; cx < kMaxSide; ++cx) {
      const auto c = cell(cx, cy);
      if (markers[c] > kMarkerCap) throw std::invalid_argument("marker count above cap");
      if (!inside(cx, cy) && (markers[c] || walls[c]))
        throw std::invalid_argument("grid content outside bounds");
    }
}

namespace {

constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

class Machine {
 public:
  Machine(GridState g, std::size_t budget) : g_(std::move(g)), budget_(budget) {}

  ExecOutcome run(const Program& p) {
    ExecOutcome out;
    block(p.body);
    out.status = status_;
    out.reason = reason_;
    out.steps = steps_;
    out.final = std::move(g_);
    return out;
  }

 private:
  bool running() const { return status_ == ExecOutcome::Status::kOk; }

  bool tick() {
    if (steps_ >= budget_) {
      status_ = ExecOutcome::Status::kTimeout;
      return false;
    }
    ++steps_;
    return true;
  }

  void crash(const char* why) {
    status_ = ExecOutcome::Status::kCrash;
    reason_ = why;
  }

  bool front_clear() const {
    const int d = static_cast<int>(g_.dir);
    const int nx = g_.x + kDx[d], ny = g_.y + kDy[d];
    return g_.inside(nx, ny) && !g_.wall(nx, ny);
  }

  bool eval(const Cond& c) {
    if (!tick()) return false;
    bool v = c.kind == Cond::Kind::kFrontIsClear ? front_clear() : g_.marker(g_.x, g_.y) > 0;
    return (c.negations % 2) ? !v : v;
  }

  void block(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (!running()) return;
      stmt(s);
    }
  }

  void stmt(const Stmt& s) {
    switch (s.op) {
      case Op::kMove: {
        if (!tick()) return;
        if (!front_clear()) return crash("wall");
        const int d = static_cast<int>(g_.dir);
        g_.x += kDx[d];
        g_.y += kDy[d];
        return;
      }
      case Op::kTurnLeft:
        if (!tick()) return;
        g_.dir = static_cast<Dir>((static_cast<int>(g_.dir) + 3) % 4);
        return;
      case Op::kTurnRight:
        if (!tick()) return;
        g_.dir = static_cast<Dir>((static_cast<int>(g_.dir) + 1) % 4);
        return;
      case Op::kPutMarker: {
        if (!tick()) return;
        auto& m = g_.markers[GridState::cell(g_.x, g_.y)];
        if (m >= kMarkerCap) return crash("marker cap");
        ++m;
        return;
      }
      case Op::kPickMarker: {
        if (!tick()) return;
        auto& m = g_.markers[GridState::cell(g_.x, g_.y)];
        if (m == 0) return crash("no marker");
        --m;
        return;
      }
      case Op::kRepeat:
        for (int i = 0; i < s.count && running(); ++i) block(s.body);
        return;
      case Op::kIf: {
        const bool v = eval(s.cond);
        if (!running()) return;
        block(v ? s.body : s.else_body);
        return;
      }
      case Op::kWhile:
        while (running()) {
          const bool v = eval(s.cond);
          if (!running() || !v) return;
          block(s.body);
        }
        return;
    }
  }

  GridState g_;
  std::size_t budget_;
  std::size_t steps_ = 0;
  ExecOutcome::Status status_ = ExecOutcome::Status::kOk;
  std::string reason_;
};

}  // namespace

ExecOutcome execute(const Program& p, const GridState& g, std::size_t step_budget) {
  return Machine(g, step_budget).run(p);
}

bool satisfies(const Program& p, const std::vector<IOPair>& pairs, std::size_t step_budget) {
  for (const auto& io : pairs) {
    auto r = execute(p, io.in, step_budget);
    if (!r.ok() || !(r.final == io.out)) return false;
  }
  return true;
}

FilterVerdict SpecFilter::check(const GivenSpec& spec, const TokenSeq& program) const {
  Program p;
  try {
    p = parse(program, limits_);
  } catch (const ParseError&) {
    return FilterVerdict::conjunction({{"parses", false, 0.0}});
  }
  std::size_t matched = 0;
  for (const auto& io : spec.given) {
    auto r = execute(p, io.in, budget_);
    if (!r.ok() || !(r.final == io.out)) break;
    ++matched;
  }
  const bool all = matched == spec.given.size();
  return FilterVerdict::conjunction(
      {{"parses", true, 1.0}, {"given_pairs", all, static_cast<double>(matched)}});
}

// ---------------------------------------------------------------------------
// Generation

namespace {

Stmt random_primitive(Rng& rng) {
  Stmt s;
  const double u = uniform01(rng);
  s.op = u < 0.4 ? Op::kMove : u < 0.6 ? Op::kTurnLeft : u < 0.8 ? Op::kTurnRight
         : u < 0.9 ? Op::kPutMarker : Op::kPickMarker;
  return s;
}

Cond random_cond(Rng& rng) {
  Cond c;
  c.kind = bernoulli(rng, 0.6) ? Cond::Kind::kFrontIsClear : Cond::Kind::kMarkersPresent;
  c.negations = bernoulli(rng, 0.3) ? 1 : 0;
  return c;
}

std::vector<Stmt> random_block(Rng& rng, const ProgramConfig& cfg, int level, int max_statements) {
  const int n = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_statements)));
  std::vector<Stmt> out;
  for (int i = 0; i < n; ++i) {
    if (level < cfg.limits.max_depth && bernoulli(rng, cfg.p_control)) {
      Stmt s;
      const double u = uniform01(rng);
      s.op = u < 0.5 ? Op::kRepeat : u < 0.8 ? Op::kIf : Op::kWhile;
      if (s.op == Op::kRepeat) s.count = 2 + static_cast<int>(uniform_index(rng, 8));
      if (s.op != Op::kRepeat) s.cond = random_cond(rng);
      s.body = random_block(rng, cfg, level + 1, cfg.max_body_statements);
      if (s.op == Op::kIf && bernoulli(rng, 0.4)) {
        s.has_else = true;
        s.else_body = random_block(rng, cfg, level + 1, cfg.max_body_statements);
      }
      out.push_back(std::move(s));
    } else {
      out.push_back(random_primitive(rng));
    }
  }
  return out;
}

std::uint64_t grid_hash(const GridState& g, std::uint64_t h) {
  auto mix = [&](std::uint64_t v) { h = mix64(h ^ v); };
  mix(static_cast<std::uint64_t>(g.width) << 8 | static_cast<std::uint64_t>(g.height));
  mix(static_cast<std::uint64_t>(g.x) << 16 | static_cast<std::uint64_t>(g.y) << 8 |
      static_cast<std::uint64_t>(g.dir));
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      mix(static_cast<std::uint64_t>(g.wall(x, y)) << 8 | static_cast<std::uint64_t>(g.marker(x, y)));
  return h;
}

}  // namespace

Program random_program(Rng& rng, const ProgramConfig& cfg) {
  for (;;) {
    Program p;
    p.body = random_block(rng, cfg, 1, cfg.max_statements);
    if (token_count(p) <= cfg.limits.max_len) return p;
  }
}

GridState random_grid(Rng& rng, int width, int height, const GridConfig& cfg) {
  GridState g = GridState::empty(width, height);
  std::vector<std::pair<int, int>> open;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (bernoulli(rng, cfg.wall_density))
        g.walls.set(GridState::cell(x, y));
      else
        open.emplace_back(x, y);
    }
  if (open.empty()) {
    g.walls.reset(GridState::cell(0, 0));
    open.emplace_back(0, 0);
  }
  for (auto [x, y] : open)
    if (bernoulli(rng, cfg.marker_density))
      g.markers[GridState::cell(x, y)] = static_cast<std::uint8_t>(
          1 + uniform_index(rng, static_cast<std::size_t>(cfg.max_initial_markers)));
  auto [rx, ry] = open[uniform_index(rng, open.size())];
  g.x = rx;
  g.y = ry;
  g.dir = static_cast<Dir>(uniform_index(rng, 4));
  return g;
}

std::vector<Task> generate_tasks(std::size_t n, const GridConfig& grid_cfg,
                                 const ProgramConfig& program_cfg, SeedStream seed) {
  if (grid_cfg.min_side < 1 || grid_cfg.max_side > kMaxSide || grid_cfg.min_side > grid_cfg.max_side)
    throw std::invalid_argument("grid sides must satisfy 1 <= min_side <= max_side <= 16");
  if (grid_cfg.n_given == 0) throw std::invalid_argument("a task needs at least one given pair");
  if (grid_cfg.max_initial_markers < 1 || grid_cfg.max_initial_markers > kMarkerCap)
    throw std::invalid_argument("max_initial_markers must be in [1, 9]");
  std::vector<Task> tasks;
  std::unordered_set<std::uint64_t> seen;
  std::size_t attempts = 0, crashed = 0, trivial = 0, duplicate = 0;
  const std::size_t n_pairs = grid_cfg.n_given + grid_cfg.n_heldout;
  while (tasks.size() < n) {
    if (attempts >= program_cfg.global_attempts)
      throw std::runtime_error("generate_tasks: budget of " + std::to_string(attempts) +
                               " programs exhausted with " + std::to_string(tasks.size()) + "/" +
                               std::to_string(n) + " tasks (crash/timeout " + std::to_string(crashed) +
                               ", identity " + std::to_string(trivial) + ", duplicate " +
                               std::to_string(duplicate) + ")");
    Rng rng = seed.child(attempts).rng();
    ++attempts;
    Program prog = random_program(rng, program_cfg);
    const auto span = static_cast<std::size_t>(grid_cfg.max_side - grid_cfg.min_side + 1);
    const int w = grid_cfg.min_side + static_cast<int>(uniform_index(rng, span));
    const int h = grid_cfg.min_side + static_cast<int>(uniform_index(rng, span));

    std::vector<IOPair> pairs;
    bool found = false, any_crash = false, any_change = false;
    for (std::size_t g = 0; g < program_cfg.grid_attempts && !found; ++g) {
      pairs.clear();
      any_change = false;
      bool ok = true;
      for (std::size_t k = 0; k < n_pairs && ok; ++k) {
        GridState in = random_grid(rng, w, h, grid_cfg);
        auto r = execute(prog, in, program_cfg.step_budget);
        if (!r.ok()) {
          ok = false;
          break;
        }
        any_change = any_change || !(r.final == in);
        pairs.push_back({std::move(in), std::move(r.final)});
      }
      if (!ok) {
        any_crash = true;
        continue;
      }
      found = any_change;
      if (!any_change) break;
    }
    if (!found) {
      if (any_change || any_crash)
        ++crashed;
      else
        ++trivial;
      continue;
    }
    std::uint64_t key = 0;
    for (Token t : to_tokens(prog)) key = mix64(key ^ t);
    for (const auto& io : pairs) key = grid_hash(io.out, grid_hash(io.in, key));
    if (!seen.insert(key).second) {
      ++duplicate;
      continue;
    }
    Task t;
    t.gold = std::move(prog);
    t.spec.given.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(grid_cfg.n_given));
    t.heldout.assign(pairs.begin() + static_cast<std::ptrdiff_t>(grid_cfg.n_given), pairs.end());
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// ---------------------------------------------------------------------------

std::uint32_t featurize(const GivenSpec& spec) {
  if (spec.given.empty()) return 0;
  int turn = -1;
  bool turn_varies = false;
  int fwd = 0, side = 0;
  bool disp_varies = false;
  int pos = 0, neg = 0, zero = 0;
  for (std::size_t i = 0; i < spec.given.size(); ++i) {
    const auto& a = spec.given[i].in;
    const auto& b = spec.given[i].out;
    const int t = (static_cast<int>(b.dir) - static_cast<int>(a.dir) + 4) % 4;
    if (i == 0)
      turn = t;
    else
      turn_varies = turn_varies || t != turn;
    // Displacement in the frame of the initial heading.
    const int d = static_cast<int>(a.dir);
    const int dx = b.x - a.x, dy = b.y - a.y;
    const int f = dx * kDx[d] + dy * kDy[d];
    const int r = dx * kDx[(d + 1) % 4] + dy * kDy[(d + 1) % 4];
    if (i == 0) {
      fwd = f;
      side = r;
    } else {
      disp_varies = disp_varies || f != fwd || r != side;
    }
    int delta = 0;
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) delta += b.marker(x, y) - a.marker(x, y);
    (delta > 0 ? pos : delta < 0 ? neg : zero)++;
  }
  const std::uint32_t turn_code = turn_varies ? 4u : static_cast<std::uint32_t>(turn);
  std::uint32_t disp_code = 18;
  if (!disp_varies) {
    const std::uint32_t fb = fwd < 0 ? 0 : fwd >= 4 ? 5 : static_cast<std::uint32_t>(fwd + 1);
    const std::uint32_t sb = side < 0 ? 0 : side == 0 ? 1 : 2;
    disp_code = fb * 3 + sb;
  }
  const int n = static_cast<int>(spec.given.size());
  const std::uint32_t marker_code = zero == n ? 0 : pos == n ? 1 : neg == n ? 2 : 3;
  return (turn_code * 19 + disp_code) * 4 + marker_code;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

using nlohmann::json;

json grid_to_json(const GridState& g) {
  json walls = json::array(), markers = json::array();
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      if (g.wall(x, y)) walls.push_back({x, y});
      if (g.marker(x, y)) markers.push_back({x, y, g.marker(x, y)});
    }
  static const char* dirs[] = {"N", "E", "S", "W"};
  return {{"w", g.width}, {"h", g.height}, {"walls", walls},
          {"robot", {{"x", g.x}, {"y", g.y}, {"dir", dirs[static_cast<int>(g.dir)]}}},
          {"markers", markers}};
}

GridState grid_from_json(const json& j) {
  GridState g;
  g.width = j.at("w").get<int>();
  g.height = j.at("h").get<int>();
  if (g.width < 1 || g.height < 1 || g.width > kMaxSide || g.height > kMaxSide)
    throw std::invalid_argument("grid side must be in [1, 16]");
  auto check = [&](int x, int y) {
    if (!g.inside(x, y)) throw std::invalid_argument("grid cell outside bounds");
  };
  for (const auto& w : j.at("walls")) {
    check(w.at(0).get<int>(), w.at(1).get<int>());
    g.walls.set(GridState::cell(w.at(0).get<int>(), w.at(1).get<int>()));
  }
  for (const auto& m : j.at("markers")) {
    check(m.at(0).get<int>(), m.at(1).get<int>());
    const int n = m.at(2).get<int>();
    if (n < 0 || n > kMarkerCap) throw std::invalid_argument("marker count outside [0, 9]");
    g.markers[GridState::cell(m.at(0).get<int>(), m.at(1).get<int>())] = static_cast<std::uint8_t>(n);
  }
  const auto& r = j.at("robot");
  g.x = r.at("x").get<int>();
  g.y = r.at("y").get<int>();
  const auto d = r.at("dir").get<std::string>();
  if (d == "N") g.dir = Dir::kNorth;
  else if (d == "E") g.dir = Dir::kEast;
  else if (d == "S") g.dir = Dir::kSouth;
  else if (d == "W") g.dir = Dir::kWest;
  else throw std::invalid_argument("unknown heading '" + d + "'");
  g.validate();
  return g;
}

json pairs_to_json(const std::vector<IOPair>& pairs) {
  json a = json::array();
  for (const auto& io : pairs) a.push_back({{"in", grid_to_json(io.in)}, {"out", grid_to_json(io.out)}});
  return a;
}

std::vector<IOPair> pairs_from_json(const json& a) {
  std::vector<IOPair> out;
  for (const auto& io : a) out.push_back({grid_from_json(io.at("in")), grid_from_json(io.at("out"))});
  return out;
}

}  // namespace

void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks) {
  for (const auto& t : tasks) {
    json j = {{"given", pairs_to_json(t.spec.given)},
              {"heldout", pairs_to_json(t.heldout)},
              {"gold", pretty_print(t.gold)}};
    out << j.dump() << '\n';
  }
}

std::vector<Task> read_tasks_jsonl(std::istream& in) {
  std::vector<Task> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      Task t;
      t.spec.given = pairs_from_json(j.at("given"));
      t.heldout = pairs_from_json(j.at("heldout"));
      t.gold = parse(j.at("gold").get<std::string>());
      if (t.spec.given.empty()) throw std::invalid_argument("task has no given pairs");
      tasks.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw std::runtime_error("task file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tasks;
}

void write_specs_jsonl(std::ostream& out, const std::vector<GivenSpec>& specs) {
  for (const auto& s : specs) out << json{{"given", pairs_to_json(s.given)}}.dump() << '\n';
}

std::vector<GivenSpec> read_specs_jsonl(std::istream& in) {
  std::vector<GivenSpec> specs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      GivenSpec s;
      s.given = pairs_from_json(json::parse(line).at("given"));
      if (s.given.empty()) throw std::invalid_argument("spec has no given pairs");
      specs.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error("spec file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return specs;
}

}  // namespace ita::gridlang
