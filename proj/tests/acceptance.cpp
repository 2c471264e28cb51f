// Acceptance checks. `acceptance fast` runs everything except the desk-scale
// attack suite; `acceptance desk` runs the two desk-scale criteria. One
// PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "helpers.hpp"
#include "muxlink/commands.hpp"

using namespace muxlink;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEpsilon = 1e-5;
// Coordinates whose +-epsilon probe flips a ReLU, max-pool or sort decision have no
// valid central difference; at most this share of them may be skipped.
constexpr double kMaxKinkShare = 0.05;
constexpr double kKpaThreshold = 65.0;
constexpr double kAcBaseline = 50.0;
constexpr double kMetricsTolerance = 0.01;  // KPA 96.77 is a rounded value

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail
            << " (" << buf << ")" << std::endl;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1 -----------------------------------------------------------------------
Outcome pairwise_rule() {
  constexpr Trit O = Trit::Zero, I = Trit::One, X = Trit::X;
  struct Row {
    double a, b, c, d, th;
    Trit ki, kj;
    const char* branch;
  };
  const Row rows[] = {
      {1.0, 0.8, 0.9, 0.4, 0.01, O, I, "worked example"},
      {0.9, 0.1, 0.5, 0.4, 0.01, O, I, "d1 wins, gi1 > gi2"},
      {0.1, 0.9, 0.5, 0.4, 0.01, I, O, "d1 wins, gi2 > gi1"},
      {0.5, 0.4, 0.9, 0.1, 0.01, O, I, "d2 wins, gj1 > gj2"},
      {0.5, 0.4, 0.1, 0.9, 0.01, I, O, "d2 wins, gj2 > gj1"},
      {0.9, 0.5, 0.1, 0.5, 0.01, X, X, "d1 == d2 above th"},
      {0.5, 0.5, 0.5, 0.5, 0.01, X, X, "all equal"},
      {1.0, 0.8, 0.9, 0.4, 0.6, X, X, "both below th"},
      {0.7, 0.5, 0.5, 0.45, 0.1, O, I, "only d1 reaches th"},
      {0.5, 0.45, 0.2, 0.5, 0.1, I, O, "only d2 reaches th"},
      {0.75, 0.5, 0.5, 0.5, 0.25, O, I, "d1 exactly at th"},
  };
  int bad = 0;
  std::string detail;
  for (const auto& r : rows) {
    auto [ki, kj] = decode_pairwise(r.a, r.b, r.c, r.d, r.th);
    if (ki != r.ki || kj != r.kj) {
      ++bad;
      detail += std::string(" [") + r.branch + " gave " + to_char(ki) + to_char(kj) + "]";
    }
  }
  return {bad == 0, std::to_string(std::size(rows) - static_cast<std::size_t>(bad)) + "/" +
                        std::to_string(std::size(rows)) + " rows" + detail};
}

// 2 -----------------------------------------------------------------------
Outcome drnl_oracle() {
  std::mt19937_64 rng(2024);
  int mismatches = 0, checked = 0;
  std::size_t largest = 0;
  while (checked < 1000) {
    const std::size_t n = 2 + rng() % 199;
    const double mean_degree = 1.0 + static_cast<double>(rng() % 40) / 10.0;
    auto g = testing::random_graph(n, std::min(1.0, mean_degree / static_cast<double>(n)), rng);
    const NodeId f = static_cast<NodeId>(rng() % n), t = static_cast<NodeId>(rng() % n);
    if (f == t) continue;
    const int hops = 1 + static_cast<int>(rng() % 3);
    auto s = extract_enclosing(g, f, t, hops, LinkSet{link_key(f, t)});
    auto o = testing::oracle_enclosing(g, f, t, hops, {{std::min(f, t), std::max(f, t)}});
    std::set<std::pair<NodeId, NodeId>> links;
    for (std::uint32_t i = 0; i < s.size(); ++i)
      for (auto j : s.adj[i])
        if (i < j) links.insert({s.nodes[i], s.nodes[j]});
    if (s.nodes != o.nodes || s.labels != o.labels || links != o.links) ++mismatches;
    largest = std::max(largest, n);
    ++checked;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(checked) +
                               " graphs (largest " + std::to_string(largest) + " nodes)"};
}

// 3 -----------------------------------------------------------------------
Outcome gradient_check() {
  std::mt19937_64 rng(7);
  auto design = generate_netlist(300, 16, 16, GenMode::Random, 5);
  auto g = build_graph(lock_dmux(design, 16, 1).locked);
  double worst = 0.0;
  std::size_t checked = 0, at_kinks = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int max_label = 2 + static_cast<int>(rng() % 6);
    const int k = 10 + static_cast<int>(rng() % 20);
    Model m(Hyperparams{}, max_label, k);
    m.initialize(rng());
    const auto& e = g.edges()[rng() % g.edges().size()];
    auto sub = extract_enclosing(g, e.first, e.second, 1 + static_cast<int>(rng() % 2),
                                 LinkSet{link_key(e.first, e.second)});
    auto r = grad_check(m, make_input(sub, max_label), static_cast<int>(rng() % 2), kGradEpsilon);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
    at_kinks += r.at_kinks;
  }
  const double kink_share = static_cast<double>(at_kinks) / static_cast<double>(checked + at_kinks);
  return {worst <= kGradTolerance && kink_share <= kMaxKinkShare,
          "max relative error " + num(worst) + " (limit " + num(kGradTolerance) + ") over " +
              std::to_string(checked) + " coordinates; " + std::to_string(at_kinks) +
              " straddled an activation kink (limit " + num(100 * kMaxKinkShare) + "%)"};
}

// 4 -----------------------------------------------------------------------
bool declared_in_order(const Netlist& n) {
  std::set<std::string> ready(n.inputs().begin(), n.inputs().end());
  for (auto i : topological_order(n.gates())) {
    for (const auto& in : n.gates()[i].inputs)
      if (!ready.count(in)) return false;
    ready.insert(n.gates()[i].output);
  }
  return ready.size() == n.inputs().size() + n.gates().size();
}

Outcome locking_soundness() {
  std::size_t mismatches = 0, order_failures = 0, reductions = 0, wrong_keys = 0, locks = 0;
  for (std::uint64_t f = 0; f < 20; ++f) {
    const std::size_t pis = 6 + f % 5;
    auto n = generate_netlist(100 + 10 * f, pis, 4 + f % 4, GenMode::Random, 100 + f);
    for (int family = 0; family < 2; ++family) {
      auto r = family == 0 ? lock_dmux(n, 8, f + 1) : lock_symmetric(n, 8, f + 1);
      ++locks;
      mismatches += testing::exhaustive_mismatches(n, r.locked, r.key);
      if (!declared_in_order(r.locked)) ++order_failures;
      for (const auto& loc : r.localities)
        for (const auto& wrong : wrong_locality_keys(loc, r.key)) {
          ++wrong_keys;
          if (!preserves_observability(n, r.locked, wrong)) ++reductions;
        }
    }
  }
  const bool ok = mismatches == 0 && order_failures == 0 && reductions == 0 && wrong_keys > 0;
  return {ok, std::to_string(locks) + " locks: " + std::to_string(mismatches) + " output mismatches, " +
                  std::to_string(order_failures) + " ordering failures, " + std::to_string(reductions) +
                  " reductions over " + std::to_string(wrong_keys) + " wrong locality keys"};
}

// 5 -----------------------------------------------------------------------
Outcome metrics_arithmetic() {
  std::vector<Trit> pred(64, Trit::Zero);
  KeyVector truth;
  truth.bits.assign(64, 0);
  pred[10] = pred[20] = Trit::X;
  pred[30] = pred[40] = Trit::One;
  auto m = compute_metrics(pred, truth);
  const double kpa_exact = 100.0 * 60.0 / 62.0;
  bool ok = m.correct == 60 && m.x == 2 && m.total == 64 && m.ac == 93.75 && m.pc == 96.875 &&
            m.kpa && std::abs(*m.kpa - 96.77) < kMetricsTolerance && *m.kpa == kpa_exact;

  auto all_x = compute_metrics(std::vector<Trit>(64, Trit::X), truth);
  ok = ok && all_x.ac == 0.0 && all_x.pc == 100.0 && !all_x.kpa;
  auto right = compute_metrics(std::vector<Trit>(64, Trit::Zero), truth);
  ok = ok && right.ac == 100.0 && right.pc == 100.0 && right.kpa && *right.kpa == 100.0;
  return {ok, "AC " + num(m.ac) + " PC " + num(m.pc) + " KPA " + (m.kpa ? num(*m.kpa) : "n/a") +
                  "; all-X PC " + num(all_x.pc) + "; all-correct AC " + num(right.ac)};
}

// 6 and 10 share one small locked design.
struct SmallAttack {
  fs::path dir;
  std::string locked_path;
  KeyVector key;
};

SmallAttack& small_attack() {
  static SmallAttack s = [] {
    SmallAttack a;
    a.dir = fs::temp_directory_path() / ("muxlink_accept_" + std::to_string(::getpid()));
    fs::create_directories(a.dir);
    auto n = generate_netlist(500, 24, 24, GenMode::Random, 31);
    auto r = lock_dmux(n, 16, 3);
    a.locked_path = (a.dir / "locked.bench").string();
    write_bench_file(r.locked, a.locked_path);
    a.key = r.key;
    return a;
  }();
  return s;
}

AttackConfig small_config() {
  AttackConfig cfg;
  cfg.hops = 2;
  cfg.epochs = 10;
  cfg.seed = 5;
  return cfg;
}

Outcome threshold_sweep() {
  auto& s = small_attack();
  auto outcome = run_attack(read_bench_file(s.locked_path), small_config());
  double prev_pc = -1.0;
  std::vector<Trit> prev;
  bool monotone = true, nested = true;
  std::string pcs;
  for (int step = 0; step <= 20; ++step) {
    auto key = redecode(outcome, 0.05 * step);
    const double pc = compute_metrics(key.trits, s.key).pc;
    if (pc < prev_pc) monotone = false;
    for (std::size_t i = 0; i < prev.size(); ++i)
      if (key.trits[i] != Trit::X && key.trits[i] != prev[i]) nested = false;
    prev = key.trits;
    prev_pc = pc;
    if (step % 5 == 0) pcs += " th=" + num(0.05 * step) + ":" + num(pc);
  }
  return {monotone && nested, std::string(monotone ? "PC non-decreasing" : "PC decreased") +
                                  (nested ? ", decided sets nested;" : ", decided sets not nested;") + pcs};
}

// 9 -----------------------------------------------------------------------
Outcome hamming_fixtures() {
  auto original = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = BUFF(a)\n");
  auto locked = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput0)\nOUTPUT(y)\n"
                            "t = AND(b, keyinput0)\ny = XOR(a, t)\n");
  const double wrong = hamming_distance(original, locked, {Trit::One}, 100000, 1);
  const double right = hamming_distance(original, locked, {Trit::Zero}, 100000, 1);

  auto n = generate_netlist(400, 20, 16, GenMode::Random, 9);
  auto r = lock_dmux(n, 32, 4);
  std::vector<Trit> correct;
  for (auto b : r.key.bits) correct.push_back(trit_of(b != 0));
  const double big = hamming_distance(n, r.locked, correct, 100000, 2);
  return {wrong == 50.0 && right == 0.0 && big == 0.0,
          "XOR fixture wrong key " + num(wrong) + "%, correct key " + num(right) +
              "%; 400-gate lock with correct key " + num(big) + "%"};
}

// 10 ----------------------------------------------------------------------
Outcome determinism() {
  auto& s = small_attack();
  const auto a = (s.dir / "a.key").string(), b = (s.dir / "b.key").string();
  std::ostringstream sink;
  cmd_attack(s.locked_path, small_config(), a, sink, nullptr);
  cmd_attack(s.locked_path, small_config(), b, sink, nullptr);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto ka = slurp(a), kb = slurp(b);
  const bool same = !ka.empty() && ka == kb && slurp(a + ".scores") == slurp(b + ".scores");
  return {same, "key files " + std::string(same ? "identical" : "differ") + " (" +
                    ka.substr(0, ka.size() - 1) + ")"};
}

// 7 and 8 -----------------------------------------------------------------
struct DeskRun {
  std::size_t design = 0;
  std::string family;
  std::uint64_t seed = 0;
  int hops = 0;
  MetricsReport m;
  double seconds = 0.0;
};

std::vector<DeskRun> desk_runs;

void run_desk_suite(const std::vector<int>& hops_list) {
  const std::size_t sizes[] = {1500, 1900, 2300, 2600, 3000};
  for (std::size_t d = 0; d < 5; ++d) {
    auto n = generate_netlist(sizes[d], 64, 64, GenMode::Random, 1000 + d);
    for (const std::string family : {"dmux", "symmetric"}) {
      auto r = family == "dmux" ? lock_dmux(n, 32, 50 + d) : lock_symmetric(n, 32, 50 + d);
      for (int hops : hops_list)
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
          AttackConfig cfg;
          cfg.hops = hops;
          cfg.threshold = 0.01;
          cfg.epochs = 100;
          cfg.seed = seed;
          auto out = run_attack(r.locked, cfg);
          DeskRun run{d, family, seed, hops, compute_metrics(out.key.trits, r.key), out.seconds};
          std::cout << "  design " << d << " (" << sizes[d] << " gates) " << family << " h=" << hops
                    << " seed " << seed << ": AC " << num(run.m.ac) << " PC " << num(run.m.pc) << " KPA "
                    << (run.m.kpa ? num(*run.m.kpa) : "n/a") << " best epoch " << out.training.best_epoch
                    << " " << num(out.seconds) << "s" << std::endl;
          desk_runs.push_back(run);
        }
    }
  }
}

struct Means {
  double ac = 0, pc = 0, kpa = 0, seconds = 0;
  std::size_t runs = 0;
};

Means mean_of(const std::function<bool(const DeskRun&)>& pick) {
  Means m;
  for (const auto& r : desk_runs) {
    if (!pick(r)) continue;
    m.ac += r.m.ac;
    m.pc += r.m.pc;
    m.kpa += r.m.kpa.value_or(0.0);
    m.seconds += r.seconds;
    ++m.runs;
  }
  if (m.runs) {
    const double n = static_cast<double>(m.runs);
    m.ac /= n, m.pc /= n, m.kpa /= n, m.seconds /= n;
  }
  return m;
}

Outcome desk_efficacy() {
  bool ok = true;
  std::string detail;
  for (std::size_t d = 0; d < 5; ++d)
    for (const std::string family : {"dmux", "symmetric"}) {
      auto m = mean_of([&](const DeskRun& r) { return r.hops == 2 && r.design == d && r.family == family; });
      const bool pass = m.runs == 3 && m.kpa >= kKpaThreshold && m.ac > kAcBaseline;
      ok = ok && pass;
      detail += " d" + std::to_string(d) + "/" + family + " KPA " + num(m.kpa) + " AC " + num(m.ac) +
                (pass ? "" : " [below]") + ";";
    }
  auto all = mean_of([](const DeskRun& r) { return r.hops == 2; });
  return {ok, "3-seed means:" + detail + " overall AC " + num(all.ac) + " PC " + num(all.pc) + " KPA " +
                  num(all.kpa)};
}

Outcome hop_trend() {
  auto h1 = mean_of([](const DeskRun& r) { return r.hops == 1; });
  auto h2 = mean_of([](const DeskRun& r) { return r.hops == 2; });
  const bool ok = h1.runs > 0 && h1.runs == h2.runs && h2.ac >= h1.ac && h2.pc >= h1.pc && h2.kpa >= h1.kpa;
  return {ok, "h=1 AC " + num(h1.ac) + " PC " + num(h1.pc) + " KPA " + num(h1.kpa) + " (" + num(h1.seconds) +
                  "s/run); h=2 AC " + num(h2.ac) + " PC " + num(h2.pc) + " KPA " + num(h2.kpa) + " (" +
                  num(h2.seconds) + "s/run)"};
}

}  // namespace

// Copies stdout into acceptance_<mode>.log in the working directory.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (traits_type::eq_int_type(c, traits_type::eof())) return traits_type::not_eof(c);
    const bool ok = a_->sputc(static_cast<char>(c)) != EOF && b_->sputc(static_cast<char>(c)) != EOF;
    return ok ? c : EOF;
  }
  int sync() override { return a_->pubsync() | b_->pubsync(); }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "fast";
  if (mode != "fast" && mode != "desk" && mode != "all") {
    std::cerr << "usage: acceptance [fast|desk|all]\n";
    return 1;
  }
  std::ofstream log_file("acceptance_" + mode + ".log");
  TeeBuf tee(std::cout.rdbuf(), log_file.rdbuf());
  std::streambuf* const console = std::cout.rdbuf(&tee);
  struct Restore {
    std::streambuf* buf;
    ~Restore() { std::cout.rdbuf(buf); }
  } restore{console};
  if (mode != "desk") {
    report(1, "pairwise decoding truth table", pairwise_rule);
    report(2, "double-radius labels vs brute-force oracle", drnl_oracle);
    report(3, "gradient check", gradient_check);
    report(4, "locking soundness", locking_soundness);
    report(5, "metrics arithmetic", metrics_arithmetic);
    report(6, "threshold monotonicity", threshold_sweep);
    report(9, "hamming distance fixtures", hamming_fixtures);
    report(10, "attack determinism", determinism);
    std::error_code ec;
    fs::remove_all(small_attack().dir, ec);
  }
  if (mode != "fast") {
    std::cout << "desk-scale suite: 5 designs x 2 families x 3 seeds at h=2 and h=1" << std::endl;
    run_desk_suite({2, 1});
    report(7, "desk-scale efficacy (h=2, K=32)", desk_efficacy);
    report(8, "hop-size trend (h=2 vs h=1)", hop_trend);
  }
  return failures == 0 ? 0 : 1;
}
