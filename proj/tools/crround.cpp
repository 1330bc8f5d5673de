// Command-line front end: balancedness tables, end-to-end rounding,
// verification suites, and Monte Carlo estimation, with JSON/CSV/pretty
// reports.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "crround/crround.hpp"
#include "crround/report.hpp"

using nlohmann::json;
using namespace crround;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string format;  // json | csv | pretty; empty means auto
  bool no_meta = false;
  double tol_polytope = kPolytopeTol;
};

std::string resolve_format(const GlobalOptions& opts) {
  if (!opts.format.empty()) return opts.format;
  if (const char* env = std::getenv("CRROUND_FORMAT"); env && *env) return env;
  return isatty(fileno(stdout)) ? "pretty" : "json";
}

// table renders as the matrix it is: one row per n, one column per k,
// blank cells where k >= n.
void print_table_matrix(const RunReport& report) {
  std::vector<int> ns, ks;
  for (const json& row : report.results) {
    if (!row.contains("n") || row.at("n").is_null()) continue;
    const int n = row.at("n").get<int>();
    const int k = row.at("k").get<int>();
    if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  }
  std::printf("%8s", "n \\ k");
  for (int k : ks) std::printf("%8d", k);
  std::printf("\n");
  auto cell = [&](const json& row) {
    if (row.at("c").is_null())
      std::printf("%8s", "");
    else
      std::printf("%8.3f", row.at("c").get<double>());
  };
  for (int n : ns) {
    std::printf("%8d", n);
    for (const json& row : report.results)
      if (!row.at("n").is_null() && row.at("n").get<int>() == n) cell(row);
    std::printf("\n");
  }
  bool any_limit = false;
  for (const json& row : report.results)
    if (row.contains("limit")) {
      if (!any_limit) std::printf("%8s", "limit");
      any_limit = true;
      cell(row);
    }
  if (any_limit) std::printf("\n");
}

void print_pretty(const RunReport& report) {
  if (report.command == "table") {
    print_table_matrix(report);
    return;
  }
  std::ostringstream out;
  out << report.command;
  for (const auto& [key, value] : report.parameters) out << "  " << key << "=" << value;
  out << "  seed=" << report.seed << "\n";
  for (const json& row : report.results) {
    if (!row.is_object()) {
      out << "  " << row.dump() << "\n";
      continue;
    }
    out << " ";
    for (auto it = row.begin(); it != row.end(); ++it) {
      out << " " << it.key() << "=";
      if (it.value().is_string())
        out << it.value().get<std::string>();
      else
        out << it.value().dump();
    }
    out << "\n";
  }
  if (report.pass.has_value()) out << (*report.pass ? "PASS" : "FAIL") << "\n";
  if (report.wall_time_ms) out << "wall_time_ms=" << *report.wall_time_ms << "\n";
  std::cout << out.str();
}

int emit(RunReport report, const GlobalOptions& opts,
         std::chrono::steady_clock::time_point started) {
  if (!opts.no_meta) {
    report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
  }
  const std::string format = resolve_format(opts);
  if (format == "json")
    std::cout << json(report).dump(2) << "\n";
  else if (format == "csv")
    std::cout << to_csv(report);
  else
    print_pretty(report);
  return report.pass.has_value() && !*report.pass ? kExitCheckFailed : kExitOk;
}

std::string fmt_double(double v, int precision = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Input parsing

struct RoundInput {
  int n = 0;
  std::vector<double> x;
  std::optional<std::vector<int>> A;
  std::optional<int> k;
  std::optional<std::vector<std::pair<std::vector<int>, int>>> partition;
};

RoundInput parse_round_json(const json& doc) {
  RoundInput input;
  input.n = doc.at("n").get<int>();
  input.x = doc.at("x").get<std::vector<double>>();
  if (static_cast<int>(input.x.size()) != input.n)
    throw std::invalid_argument("input: x must list exactly n coordinates");
  if (doc.contains("A")) input.A = doc.at("A").get<std::vector<int>>();
  if (doc.contains("k")) input.k = doc.at("k").get<int>();
  if (doc.contains("partition")) {
    std::vector<std::pair<std::vector<int>, int>> blocks;
    for (const json& b : doc.at("partition"))
      blocks.emplace_back(b.at("block").get<std::vector<int>>(), b.at("cap").get<int>());
    input.partition = std::move(blocks);
  }
  return input;
}

RoundInput parse_round_csv(std::istream& in) {
  RoundInput input;
  std::string token;
  while (std::getline(in, token)) {
    std::stringstream line(token);
    std::string cell;
    while (std::getline(line, cell, ',')) {
      if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
      input.x.push_back(std::stod(cell));
    }
  }
  if (input.x.empty()) throw std::invalid_argument("input: no coordinates found in CSV");
  input.n = static_cast<int>(input.x.size());
  return input;
}

RoundInput load_round_input(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("input: cannot open " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return parse_round_csv(file);
  json doc;
  file >> doc;
  return parse_round_json(doc);
}

// "2:1,3:1,4:2" -> consecutive blocks of the given sizes and capacities.
PartitionMatroid parse_partition_spec(const std::string& spec, int* n_out) {
  std::vector<int> sizes, caps;
  std::stringstream in(spec);
  std::string chunk;
  while (std::getline(in, chunk, ',')) {
    const auto colon = chunk.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("partition spec: expected size:cap pairs");
    sizes.push_back(std::stoi(chunk.substr(0, colon)));
    caps.push_back(std::stoi(chunk.substr(colon + 1)));
  }
  int n = 0;
  for (int s : sizes) n += s;
  if (n < 1) throw std::invalid_argument("partition spec: empty ground set");
  const GroundSet ground(n);
  std::vector<ElementSet> blocks;
  int next = 0;
  for (int s : sizes) {
    std::vector<int> members;
    for (int i = 0; i < s; ++i) members.push_back(next++);
    blocks.emplace_back(ground, std::move(members));
  }
  if (n_out) *n_out = n;
  return PartitionMatroid(ground, std::move(blocks), std::move(caps));
}

PartitionMatroid build_partition(const GroundSet& ground,
                                 const std::vector<std::pair<std::vector<int>, int>>& raw) {
  std::vector<ElementSet> blocks;
  std::vector<int> caps;
  for (const auto& [members, cap] : raw) {
    blocks.emplace_back(ground, members);
    caps.push_back(cap);
  }
  return PartitionMatroid(ground, std::move(blocks), std::move(caps));
}

// ---------------------------------------------------------------------------
// table

struct TableOptions {
  std::vector<int> n_list{2, 3, 4, 5, 10, 100, 1000};
  std::vector<int> k_list{1, 2, 3, 4, 9, 99, 999};
  bool limit_row = false;
};

RunReport run_table(const TableOptions& opts, const GlobalOptions& global) {
  RunReport report;
  report.command = "table";
  report.seed = global.seed;
  std::ostringstream ns, ks;
  for (int n : opts.n_list) ns << n << " ";
  for (int k : opts.k_list) ks << k << " ";
  report.parameters = {{"n", ns.str()}, {"k", ks.str()}};

  for (int n : opts.n_list) {
    for (int k : opts.k_list) {
      json row{{"n", n}, {"k", k}};
      // Cells with k >= n mirror the blank cells of the published table.
      row["c"] = (k >= 1 && n >= 2 && k <= n - 1) ? json(balancedness_c(k, n)) : json(nullptr);
      report.results.push_back(std::move(row));
    }
  }
  if (opts.limit_row) {
    for (int k : opts.k_list)
      report.results.push_back(json{{"n", nullptr}, {"k", k}, {"c", balancedness_limit(k)},
                                    {"limit", true}});
  }
  return report;
}

// ---------------------------------------------------------------------------
// round

struct RoundOptions {
  std::string input_path;
  std::optional<int> k;
  std::string partition_spec;
  long trials = 1;
  bool sample_r = false;
  long max_emitted = 100000;
};

RunReport run_round(const RoundOptions& opts, const GlobalOptions& global) {
  RoundInput input = load_round_input(opts.input_path);
  if (opts.k) input.k = opts.k;

  const GroundSet ground(input.n);
  const FractionalPoint x(input.x);

  std::optional<PartitionMatroid> partition;
  if (!opts.partition_spec.empty()) {
    int spec_n = 0;
    PartitionMatroid m = parse_partition_spec(opts.partition_spec, &spec_n);
    if (spec_n != input.n)
      throw std::invalid_argument("partition spec does not cover the input ground set");
    partition = std::move(m);
  } else if (input.partition) {
    partition = build_partition(ground, *input.partition);
  }
  std::optional<UniformMatroid> uniform;
  if (!partition) {
    if (!input.k) throw std::invalid_argument("round: provide k or a partition");
    uniform = UniformMatroid(ground, *input.k);
  }

  const bool fixed_A = input.A.has_value() && !opts.sample_r;
  std::optional<ElementSet> A;
  if (fixed_A) A = ElementSet(ground, *input.A);

  RunReport report;
  report.command = "round";
  report.seed = global.seed;
  report.parameters = {{"input", opts.input_path},
                       {"trials", std::to_string(opts.trials)},
                       {"mode", fixed_A ? "fixed-set" : "sample-R"}};
  if (input.k) report.parameters["k"] = std::to_string(*input.k);
  if (partition) report.parameters["partition"] = opts.partition_spec.empty()
                                                      ? std::string("from-input")
                                                      : opts.partition_spec;

  RandomStream rng(global.seed);
  std::vector<long> kept(static_cast<std::size_t>(input.n), 0);
  std::vector<long> realized(static_cast<std::size_t>(input.n), 0);
  for (long t = 0; t < opts.trials; ++t) {
    const ElementSet realized_set = fixed_A ? *A : sample_R(x, rng);
    for (int e : realized_set.members()) ++realized[static_cast<std::size_t>(e)];
    const SchemeOutcome out =
        partition ? select_partition(x, realized_set, *partition, rng, global.tol_polytope)
                  : select(x, realized_set, *uniform, rng, global.tol_polytope);
    for (int e : out.selected.members()) ++kept[static_cast<std::size_t>(e)];
    if (t < opts.max_emitted)
      report.results.push_back(json{{"trial", t},
                                    {"selected", out.selected.members()},
                                    {"truncated", out.truncated}});
  }
  for (int e = 0; e < input.n; ++e) {
    const long base = fixed_A ? opts.trials : realized[static_cast<std::size_t>(e)];
    json row{{"element", e},
             {"kept", kept[static_cast<std::size_t>(e)]},
             {"conditioned_trials", base}};
    row["keep_frequency"] =
        base > 0 ? json(static_cast<double>(kept[static_cast<std::size_t>(e)]) /
                        static_cast<double>(base))
                 : json(nullptr);
    report.results.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::string suite = "all";
  int n = 5;
  int k = 2;
  int n_max = 0;        // 0: per-suite default
  long trials = 0;      // 0: per-suite default
  int resolution = 0;   // 0: snapped default
  std::string partition_spec = "2:1,3:1,4:2";
  double tol = 0.0;     // 0: per-suite default
};

struct CheckRecorder {
  std::vector<json>* rows;
  bool all_pass = true;

  void add(const std::string& check, double measured, double tolerance, bool pass, json extra = {}) {
    json row{{"check", check}, {"measured", measured}, {"tolerance", tolerance}, {"pass", pass}};
    if (extra.is_object())
      for (auto it = extra.begin(); it != extra.end(); ++it) row[it.key()] = it.value();
    rows->push_back(std::move(row));
    all_pass = all_pass && pass;
  }
};

FractionalPoint random_point_box(int n, RandomStream& rng) {
  std::vector<double> coords(static_cast<std::size_t>(n));
  for (double& v : coords) v = rng.next_unit();
  return FractionalPoint(std::move(coords));
}

void verify_lemma22(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-9;
  const long rounds = opts.trials > 0 ? opts.trials : 300;
  double worst_sum = 0.0, min_weight = 1.0;
  for (long t = 0; t < rounds; ++t) {
    const int n = 3 + static_cast<int>(rng.next_below(10));
    const GroundSet g(n);
    const FractionalPoint x = random_point_box(n, rng);
    const int a = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    std::vector<int> members;
    for (int i = 0; i < a; ++i) members.push_back(i);
    const ElementSet A(g, std::move(members));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(a - 1)));
    const SubsetDistribution dist = enumerate_distribution(x, A, k);
    double sum = 0.0;
    for (const auto& [set, p] : dist.entries) {
      min_weight = std::min(min_weight, p);
      sum += p;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  rec.add("q-weights nonnegative", min_weight, 0.0, min_weight >= 0.0);
  rec.add("q-weights sum to 1", worst_sum, tol, worst_sum <= tol);
}

void verify_lemma23(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-9;
  const long rounds = opts.trials > 0 ? opts.trials : 300;
  double worst = 0.0;
  for (long t = 0; t < rounds; ++t) {
    const int n = 3 + static_cast<int>(rng.next_below(10));
    const GroundSet g(n);
    const FractionalPoint x = random_point_box(n, rng);
    const int a = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    std::vector<int> members;
    for (int i = 0; i < a; ++i) members.push_back(i);
    const ElementSet A(g, std::move(members));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(a - 1)));
    const int e = A.members()[rng.next_below(static_cast<std::uint64_t>(a))];
    double enumerated = 0.0;
    for (const auto& [set, p] : enumerate_distribution(x, A, k).entries)
      if (set.contains(e)) enumerated += p;
    worst = std::max(worst, std::abs(marginal(x, A, e, k) - enumerated));
  }
  rec.add("closed-form marginal vs enumerated mass", worst, tol, worst <= tol);
}

void verify_lemma27(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-10;
  const long rounds = opts.trials > 0 ? opts.trials : 500;
  double worst = 0.0;
  for (long t = 0; t < rounds; ++t) {
    const int s = 1 + static_cast<int>(rng.next_below(12));
    const GroundSet g(s + 1);
    const ElementSet S = ElementSet::full(g).without(s);
    const FractionalPoint x = random_point_box(s + 1, rng);
    const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(s + 2)));
    worst = std::max(worst, std::abs(h_value(x, S, k) - h_value_recursive(x, S, k)));
  }
  // Degenerate level: both routes must agree on the zero polynomial.
  const GroundSet g4(4);
  const ElementSet S(g4, {0, 1, 2});
  const FractionalPoint x = random_point_box(4, rng);
  worst = std::max(worst, std::abs(h_value(x, S, 0) - h_value_recursive(x, S, 0)));
  rec.add("level-sum identity for h", worst, tol, worst <= tol);
}

void verify_thm25(const VerifyOptions& opts, RandomStream&, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-6;
  const int n = opts.n, k = opts.k;
  const int base = opts.resolution > 0 ? opts.resolution : (n <= 4 ? 60 : 30);
  const int res = snap_resolution(base, n);
  const GValueEvaluator eval(n, k, 0);
  const auto objective = [&](const std::vector<double>& point) { return eval.value(point); };
  const GridSearchResult best =
      grid_maximize(n, res, static_cast<double>(k),
                    objective, static_cast<int>(std::thread::hardware_concurrency()));
  const double target = 1.0 - balancedness_c(k, n);
  const bool at_center = best.best_indices == std::vector<int>(static_cast<std::size_t>(n), res * k / n);
  rec.add("grid max of drop probability", std::abs(best.best_value - target), tol,
          std::abs(best.best_value - target) <= tol,
          json{{"resolution", res}, {"points", best.points_scanned}});
  rec.add("argmax at symmetric point", at_center ? 0.0 : 1.0, 0.0, at_center);
  rec.add("no grid point above the bound", std::max(0.0, best.best_value - target), 1e-9,
          best.best_value <= target + 1e-9);
}

void verify_lemma26(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-9;
  const int n = opts.n, k = opts.k;
  const long rounds = opts.trials > 0 ? opts.trials : 50;
  const AnalysisContext ctx(GroundSet(n), k, n - 1);
  const ElementSet S = ctx.rest();
  double worst = 0.0;
  for (long t = 0; t < rounds; ++t) {
    std::vector<double> coords(static_cast<std::size_t>(n), 0.0);
    double x_S;
    do {
      x_S = 0.0;
      for (int i : S.members()) {
        coords[static_cast<std::size_t>(i)] = rng.next_unit();
        x_S += coords[static_cast<std::size_t>(i)];
      }
    } while (x_S < k - 1 || x_S > k);
    coords[static_cast<std::size_t>(n - 1)] = std::min(1.0, static_cast<double>(k) - x_S);
    const FractionalPoint x(coords);
    worst = std::max(worst, std::abs(g_value(ctx, x) - h_value(x, S, k) / k));
  }
  rec.add("equality at x_e = k - x(S)", worst, tol, worst <= tol);
}

void verify_thm29(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const double tol = opts.tol > 0 ? opts.tol : 1e-9;
  const int n_max = opts.n_max > 0 ? opts.n_max : 12;
  double worst = 0.0;
  for (int n = 2; n <= n_max; ++n)
    for (int k = 1; k <= n - 1; ++k)
      worst = std::max(worst, std::abs(optimality_bound(k, n) - balancedness_c(k, n)));
  rec.add("expected rank / k equals c(k,n)", worst, tol, worst <= tol);

  const long rounds = opts.trials > 0 ? opts.trials : 200;
  double worst_face = 0.0;
  for (long t = 0; t < rounds; ++t) {
    const int n = 3 + static_cast<int>(rng.next_below(10));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const GroundSet g(n);
    const FractionalPoint x = random_point_on_face(g, k, rng);
    const double er = expected_rank(UniformMatroid(g, k), x);
    worst_face = std::max(worst_face,
                          std::abs(er + h_value(x, ElementSet::full(g), k) - k));
  }
  rec.add("rank shortfall identity on the tight face", worst_face, 1e-10, worst_face <= 1e-10);
}

void verify_thm210(const VerifyOptions& opts, RandomStream& rng, CheckRecorder& rec) {
  const long chains = opts.trials > 0 ? opts.trials : 100000;
  const long per_point = 100;
  long done = 0, violations = 0;
  double min_diff = std::numeric_limits<double>::infinity();
  while (done < chains) {
    const int n = 4 + static_cast<int>(rng.next_below(7));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const FractionalPoint x = random_point_in_polytope(GroundSet(n), k, rng);
    const long batch = std::min(per_point, chains - done);
    const MonotonicityReport r = monotonicity_probe(x, k, batch, rng);
    done += r.chains;
    violations += r.violations;
    min_diff = std::min(min_diff, r.min_difference);
  }
  rec.add("marginal never grows with the realized set", static_cast<double>(violations), 0.0,
          violations == 0, json{{"chains", done}, {"min_difference", min_diff}});

  // Tight configuration: x_e + x_f = k and x = 0 elsewhere on A. Box
  // feasibility of x_e + x_f = k restricts this construction to k <= 2.
  const int k = std::min(2, std::max(1, opts.k));
  const int n = k + 3;
  std::vector<double> coords(static_cast<std::size_t>(n), 0.0);
  coords[0] = k >= 2 ? 1.0 : 0.3;
  coords[static_cast<std::size_t>(n - 1)] = static_cast<double>(k) - coords[0];
  std::vector<int> members;
  for (int i = 0; i < std::min(n - 1, k + 1); ++i) members.push_back(i);
  const GroundSet g(n);
  const ElementSet A(g, std::move(members));
  const FractionalPoint x(coords);
  const double diff = marginal(x, A, 0, k) - marginal(x, A.with(n - 1), 0, k);
  rec.add("tight chain difference is zero", std::abs(diff), 1e-12, std::abs(diff) <= 1e-12);
}

void verify_hessian(const VerifyOptions& opts, RandomStream&, CheckRecorder& rec) {
  const int n = opts.n, k = opts.k;
  const double c = hessian_center_scale(k, n);
  const SquareMatrix H = hessian_at_center(k, n);
  const SquareMatrix fd = hessian_finite_difference(k, n);
  double worst = 0.0;
  for (int i = 0; i < H.dim; ++i)
    for (int j = 0; j < H.dim; ++j) worst = std::max(worst, std::abs(H.at(i, j) - fd.at(i, j)));
  rec.add("closed form vs finite differences", worst, 1e-4, worst <= 1e-4);

  const std::vector<double> eigs = symmetric_eigenvalues(H);
  double worst_rel = 0.0;
  bool all_negative = true;
  std::vector<double> normalized;
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    const double expected = i == 0 ? -c * n : -c;
    worst_rel = std::max(worst_rel, std::abs(eigs[i] - expected) / std::abs(expected));
    all_negative = all_negative && eigs[i] < 0.0;
    normalized.push_back(-eigs[i] / c);
  }
  rec.add("spectrum is -c {1 x (n-2), n}", worst_rel, 1e-9, worst_rel <= 1e-9,
          json{{"eigenvalues_of_minus_H_over_c", normalized}});
  rec.add("negative definite", all_negative ? 0.0 : 1.0, 0.0, all_negative);
}

void verify_alpha(const VerifyOptions& opts, RandomStream&, CheckRecorder& rec) {
  const int n_max = opts.n_max > 0 ? opts.n_max : 200;
  const AlphaMonotonicityReport report = alpha_inequality_check(n_max);
  rec.add("alpha strict growth sweep", static_cast<double>(report.violations.size()), 0.0,
          report.passed(), json{{"pairs", report.pairs_checked}, {"n_max", n_max}});
}

void verify_partition(const VerifyOptions& opts, RandomStream&, CheckRecorder& rec) {
  const PartitionMatroid m = parse_partition_spec(opts.partition_spec, nullptr);
  const int n = m.ground().size();
  std::vector<double> coords(static_cast<std::size_t>(n), 0.0);
  for (int b = 0; b < m.block_count(); ++b)
    for (int e : m.block(b).members())
      coords[static_cast<std::size_t>(e)] =
          static_cast<double>(m.capacity(b)) / m.block(b).size();
  const FractionalPoint x(coords);

  TrialConfig cfg;
  cfg.trials = opts.trials > 0 ? opts.trials : 200000;
  cfg.seed = 12345;
  const auto estimates = estimate_balancedness(m, x, cfg);

  double worst_sigma = 0.0;
  for (const BalancednessEstimate& est : estimates) {
    const int b = m.block_of(est.element);
    const double target = balancedness_c(m.capacity(b), m.block(b).size());
    const double sigmas =
        est.std_error > 0 ? std::abs(est.conditional_keep - target) / est.std_error : 0.0;
    worst_sigma = std::max(worst_sigma, sigmas);
  }
  rec.add("per-element keep rate at own block's c", worst_sigma, 4.0, worst_sigma <= 4.0,
          json{{"trials", cfg.trials}});

  double min_c = 1.0;
  for (int b = 0; b < m.block_count(); ++b) {
    const int d = m.capacity(b);
    const int size = m.block(b).size();
    if (d >= 1 && d < size) min_c = std::min(min_c, balancedness_c(d, size));
  }
  const double reported = partition_balancedness(m);
  rec.add("scheme balancedness equals the worst block", std::abs(reported - min_c), 0.0,
          reported == min_c, json{{"balancedness", reported}});
}

void verify_sampler(const VerifyOptions& opts, RandomStream&, CheckRecorder& rec) {
  const int n = opts.n, k = opts.k;
  // Deterministic skewed interior point of the polytope.
  std::vector<double> coords(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    coords[static_cast<std::size_t>(i)] = 0.25 + 0.5 * i / std::max(1, n - 1);
    sum += coords[static_cast<std::size_t>(i)];
  }
  const double target_mass = 0.9 * k;
  if (sum > target_mass)
    for (double& v : coords) v *= target_mass / sum;
  const FractionalPoint x(coords);

  TrialConfig cfg;
  cfg.trials = opts.trials > 0 ? opts.trials : 200000;
  cfg.seed = 777;
  const ChiSquareFit fit = chi_square_fit(x, ElementSet::full(GroundSet(n)), k, cfg);
  rec.add("chi-square fit against enumerated table", fit.statistic, fit.critical, fit.pass,
          json{{"dof", fit.dof}, {"draws", fit.draws}});
}

RunReport run_verify(const VerifyOptions& opts, const GlobalOptions& global) {
  RunReport report;
  report.command = "verify";
  report.seed = global.seed;
  report.parameters = {{"suite", opts.suite},
                       {"n", std::to_string(opts.n)},
                       {"k", std::to_string(opts.k)}};

  using Suite = void (*)(const VerifyOptions&, RandomStream&, CheckRecorder&);
  const std::vector<std::pair<std::string, Suite>> suites = {
      {"lemma2.2", verify_lemma22},   {"lemma2.3", verify_lemma23},
      {"lemma2.7", verify_lemma27},   {"thm2.5", verify_thm25},
      {"lemma2.6-equality", verify_lemma26}, {"thm2.9", verify_thm29},
      {"thm2.10", verify_thm210},     {"hessian", verify_hessian},
      {"alpha-monotone", verify_alpha}, {"partition", verify_partition},
      {"sampler-fit", verify_sampler},
  };

  CheckRecorder rec{&report.results};
  RandomStream rng(global.seed);
  bool found = false;
  for (const auto& [name, fn] : suites) {
    if (opts.suite != "all" && opts.suite != name) continue;
    found = true;
    fn(opts, rng, rec);
  }
  if (!found) throw std::invalid_argument("verify: unknown suite '" + opts.suite + "'");
  report.pass = rec.all_pass;
  return report;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
  int n = 0;
  std::optional<int> k;
  std::string partition_spec;
  std::string x_spec = "symmetric";
  long trials = 100000;
  int shards = 1;
  double z = 3.0;
};

RunReport run_estimate(const EstimateOptions& opts, const GlobalOptions& global) {
  std::optional<PartitionMatroid> partition;
  int n = opts.n;
  if (!opts.partition_spec.empty()) {
    partition = parse_partition_spec(opts.partition_spec, &n);
  } else if (!opts.k || n < 1) {
    throw std::invalid_argument("estimate: provide --n with --k, or --partition");
  }
  const GroundSet ground(n);
  std::optional<UniformMatroid> uniform;
  if (!partition) uniform = UniformMatroid(ground, *opts.k);

  const double reference = partition ? partition_balancedness(*partition)
                                     : balancedness_c(std::min(*opts.k, n), n);

  // symmetric | random:<count> | explicit comma-separated coordinates
  std::vector<FractionalPoint> points;
  RandomStream rng(global.seed);
  if (opts.x_spec == "symmetric") {
    std::vector<double> coords(static_cast<std::size_t>(n), 0.0);
    if (partition) {
      for (int b = 0; b < partition->block_count(); ++b)
        for (int e : partition->block(b).members())
          coords[static_cast<std::size_t>(e)] =
              static_cast<double>(partition->capacity(b)) / partition->block(b).size();
    } else {
      const double v = std::min(1.0, static_cast<double>(*opts.k) / n);
      for (double& c : coords) c = v;
    }
    points.emplace_back(std::move(coords));
  } else if (opts.x_spec.rfind("random:", 0) == 0) {
    const int count = std::stoi(opts.x_spec.substr(7));
    if (count < 1) throw std::invalid_argument("estimate: random point count must be >= 1");
    for (int i = 0; i < count; ++i) {
      if (partition) {
        std::vector<double> coords(static_cast<std::size_t>(n));
        for (double& v : coords) v = rng.next_unit();
        for (int b = 0; b < partition->block_count(); ++b) {
          double s = 0.0;
          for (int e : partition->block(b).members()) s += coords[static_cast<std::size_t>(e)];
          if (s > partition->capacity(b))
            for (int e : partition->block(b).members())
              coords[static_cast<std::size_t>(e)] *= partition->capacity(b) / s;
        }
        points.emplace_back(std::move(coords));
      } else {
        points.push_back(random_point_in_polytope(ground, *opts.k, rng));
      }
    }
  } else {
    std::vector<double> coords;
    std::stringstream in(opts.x_spec);
    std::string cell;
    while (std::getline(in, cell, ',')) coords.push_back(std::stod(cell));
    if (static_cast<int>(coords.size()) != n)
      throw std::invalid_argument("estimate: explicit x must list n coordinates");
    points.emplace_back(std::move(coords));
  }

  RunReport report;
  report.command = "estimate";
  report.seed = global.seed;
  report.parameters = {{"x", opts.x_spec},
                       {"trials", std::to_string(opts.trials)},
                       {"shards", std::to_string(opts.shards)},
                       {"reference_c", fmt_double(reference)}};
  if (partition)
    report.parameters["partition"] = opts.partition_spec;
  else
    report.parameters["k"] = std::to_string(*opts.k);

  TrialConfig cfg;
  cfg.trials = opts.trials;
  cfg.z = opts.z;
  cfg.parallel_shards = opts.shards;

  bool any_flagged = false;
  for (std::size_t p = 0; p < points.size(); ++p) {
    cfg.seed = RandomStream::splitmix64(global.seed + 0x51ab * p);
    const auto estimates = partition ? estimate_balancedness(*partition, points[p], cfg)
                                     : estimate_balancedness(*uniform, points[p], cfg);
    for (const BalancednessEstimate& est : estimates) {
      const bool flagged = est.has_data() && est.ci_high < reference;
      any_flagged = any_flagged || flagged;
      json row{{"point", p},
               {"element", est.element},
               {"trials_conditioned", est.trials_conditioned},
               {"flagged", flagged}};
      if (est.has_data()) {
        row["conditional_keep"] = est.conditional_keep;
        row["std_error"] = est.std_error;
        row["ci_low"] = est.ci_low;
        row["ci_high"] = est.ci_high;
      } else {
        row["conditional_keep"] = nullptr;
      }
      report.results.push_back(std::move(row));
    }
  }
  report.pass = !any_flagged;
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone contention resolution for uniform and partition matroids"};
  app.require_subcommand(1);

  GlobalOptions global;
  if (const char* env = std::getenv("CRROUND_SEED"); env && *env)
    global.seed = std::strtoull(env, nullptr, 10);
  app.add_option("--seed", global.seed, "Random seed (env CRROUND_SEED)");
  app.add_option("--format", global.format, "Output format: json, csv, or pretty")
      ->check(CLI::IsMember({"json", "csv", "pretty"}));
  app.add_flag("--no-meta", global.no_meta, "Omit wall-clock metadata for byte-stable output");
  app.add_option("--tol-polytope", global.tol_polytope, "Polytope membership tolerance");

  TableOptions table;
  CLI::App* table_cmd = app.add_subcommand("table", "Balancedness table c(k,n)");
  table_cmd->add_option("--n", table.n_list, "Ground-set sizes");
  table_cmd->add_option("--k", table.k_list, "Rank bounds");
  table_cmd->add_flag("--limit-row", table.limit_row, "Append the n->infinity limit per k");

  RoundOptions round;
  CLI::App* round_cmd = app.add_subcommand("round", "Run the scheme on an input point");
  round_cmd->add_option("--input", round.input_path, "JSON or CSV input file")->required();
  round_cmd->add_option("--k", round.k, "Rank bound (overrides input)");
  round_cmd->add_option("--partition", round.partition_spec,
                        "Partition spec size:cap[,size:cap...] (overrides input)");
  round_cmd->add_option("--trials", round.trials, "Number of trials");
  round_cmd->add_flag("--sample-r", round.sample_r, "Sample R(x) even when the input fixes A");
  round_cmd->add_option("--max-emitted", round.max_emitted, "Cap on per-trial rows in the report");

  VerifyOptions verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
  verify_cmd->add_option("suite", verify.suite,
                         "one of: lemma2.2 lemma2.3 lemma2.7 thm2.5 lemma2.6-equality thm2.9 "
                         "thm2.10 hessian alpha-monotone partition sampler-fit all");
  verify_cmd->add_option("--n", verify.n, "Ground-set size for sized suites");
  verify_cmd->add_option("--k", verify.k, "Rank bound for sized suites");
  verify_cmd->add_option("--n-max", verify.n_max, "Sweep bound for sweep suites");
  verify_cmd->add_option("--trials", verify.trials, "Trial count override");
  verify_cmd->add_option("--resolution", verify.resolution, "Grid resolution override");
  verify_cmd->add_option("--partition", verify.partition_spec, "Partition spec for the partition suite");
  verify_cmd->add_option("--tol", verify.tol, "Tolerance override where applicable");

  EstimateOptions estimate;
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Monte Carlo balancedness estimates");
  estimate_cmd->add_option("--n", estimate.n, "Ground-set size");
  estimate_cmd->add_option("--k", estimate.k, "Rank bound");
  estimate_cmd->add_option("--partition", estimate.partition_spec, "Partition spec");
  estimate_cmd->add_option("--x", estimate.x_spec,
                           "symmetric | random:<count> | comma-separated coordinates");
  estimate_cmd->add_option("--trials", estimate.trials, "Trials per point");
  estimate_cmd->add_option("--shards", estimate.shards, "Parallel shards");
  estimate_cmd->add_option("--z", estimate.z, "Confidence multiplier");

  const auto started = std::chrono::steady_clock::now();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (table_cmd->parsed()) return emit(run_table(table, global), global, started);
    if (round_cmd->parsed()) return emit(run_round(round, global), global, started);
    if (verify_cmd->parsed()) return emit(run_verify(verify, global), global, started);
    if (estimate_cmd->parsed()) return emit(run_estimate(estimate, global), global, started);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
