#include "tusnady/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tusnady/continuity_correction.hpp"
#include "tusnady/errors.hpp"
#include "tusnady/gaussian_kernel.hpp"
#include "tusnady/llt_expansion.hpp"
#include "tusnady/parallel.hpp"
#include "tusnady/quantile_coupling.hpp"

namespace tusnady {

namespace {

constexpr std::int64_t kSweepCeiling = 100000;
constexpr long kLindelofMax = 10000;

double tau_for(const RunConfig& c, const BinomialModel& model) {
  return c.tau ? *c.tau : minimal_tau(model);
}

// (m, x) pairs, fanned out over workers, reports appended in grid order.
template <class Fn>
VerificationReport sweep_grid(const RunConfig& c, Fn&& fn) {
  struct Task {
    std::int64_t m;
    Rational x;
  };
  std::vector<Task> tasks;
  for (auto m : c.m_list) {
    for (const auto& x : c.x_list) tasks.push_back({m, x});
  }
  std::vector<VerificationReport> parts(tasks.size());
  parallel_for(tasks.size(), c.workers, [&](std::size_t i) {
    const BinomialModel model(tasks[i].m, tasks[i].x);
    parts[i] = fn(model, tau_for(c, model));
  });
  VerificationReport out;
  for (auto& p : parts) out.append(std::move(p));
  return out;
}

VerificationReport run_llt(const RunConfig& c) {
  return sweep_grid(c, [](const BinomialModel& model, double tau) {
    return verify_llt(model, tau, LltOptions{kSweepCeiling});
  });
}

VerificationReport run_continuity(const RunConfig& c) {
  return sweep_grid(c, [](const BinomialModel& model, double tau) {
    return verify_continuity(model, tau, ContinuityOptions{kSweepCeiling, true});
  });
}

VerificationReport run_corollary(const RunConfig& c) {
  std::vector<VerificationReport> parts(c.m_list.size());
  parallel_for(parts.size(), c.workers,
               [&](std::size_t i) { parts[i] = verify_corollary(c.m_list[i], c.z_points.value_or(50)); });
  VerificationReport out;
  for (auto& p : parts) out.append(std::move(p));
  return out;
}

VerificationReport run_tusnady(const RunConfig& c) {
  VerificationReport out;
  for (auto m : c.m_list) {
    TusnadyOptions opts;
    opts.z_points = c.z_points.value_or(64);
    opts.workers = c.workers;
    out.append(verify_tusnady(m, opts));
  }
  return out;
}

VerificationReport run_constants(const RunConfig& c) {
  VerificationReport out;
  const char* ids[] = {"constants.sup_mills_7", "constants.sup_phi_6", "constants.sup_hermite_2",
                       "constants.sup_tail_12"};
  const SupConstantsReport sups = sup_constants_check();
  for (std::size_t i = 0; i < sups.items.size(); ++i) {
    const SupConstant& s = sups.items[i];
    VerificationRecord r;
    r.check_id = ids[i];
    r.z = s.argmax;
    if (s.equality) {
      r.measured = std::fabs(s.sup - s.allowed);
      r.allowed = s.tolerance;
    } else {
      r.measured = s.sup;
      r.allowed = s.allowed;
    }
    r.outcome = s.passed ? Outcome::pass : Outcome::fail;
    out.add(std::move(r));
  }

  const int orders[] = {1, 2, 3, 4, 6};
  std::vector<RiemannCheck> checks(std::size(orders));
  parallel_for(checks.size(), c.workers, [&](std::size_t i) { checks[i] = check_riemann_bound(orders[i]); });
  for (const auto& rc : checks) {
    VerificationRecord r;
    r.check_id = "constants.riemann_j" + std::to_string(rc.j);
    r.z = rc.worst_d;
    r.measured = rc.worst_ratio;
    r.allowed = 1.0;
    r.outcome = rc.passed ? Outcome::pass : Outcome::fail;
    out.add(std::move(r));
  }

  std::vector<double> ratios(static_cast<std::size_t>(kLindelofMax));
  parallel_for(ratios.size(), c.workers, [&](std::size_t i) {
    const StirlingExpansion s = stirling_lindelof(static_cast<long>(i) + 1);
    ratios[i] = std::fabs(s.lambda_n) / s.lambda_bound;
  });
  std::size_t worst = 0;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    if (!(ratios[i] <= ratios[worst])) worst = i;
  }
  VerificationRecord r;
  r.check_id = "constants.lindelof";
  r.a = static_cast<std::int64_t>(worst) + 1;
  r.measured = ratios[worst];
  r.allowed = 1.0;
  r.outcome = judge(r.measured, r.allowed);
  out.add(std::move(r));
  return out;
}

std::string render(const VerificationReport& report, OutputFormat f) {
  return f == OutputFormat::json ? to_json(report) : to_csv(report);
}

std::string render_figure(const std::vector<Figure1Point>& series, OutputFormat f) {
  if (f == OutputFormat::csv) return figure1_csv(series);
  std::string out = "[\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += "  {\"m\": " + std::to_string(series[i].m) + ", \"abs_residual\": " +
           format_number(series[i].abs_residual) + "}";
    out += i + 1 < series.size() ? ",\n" : "\n";
  }
  return out + "]\n";
}

std::int64_t parse_count(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError("cannot parse m value '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v) || v != std::floor(v) || v < 1.0 || v > 9.0e15) {
    throw DomainError("m must be a positive integer, got '" + text + "'");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "llt") return Command::llt;
  if (name == "continuity") return Command::continuity;
  if (name == "corollary") return Command::corollary;
  if (name == "tusnady") return Command::tusnady;
  if (name == "constants") return Command::constants;
  if (name == "figure1") return Command::figure1;
  return std::nullopt;
}

RunConfig with_defaults(RunConfig c) {
  if (c.m_list.empty()) {
    switch (c.command) {
      case Command::llt: c.m_list = {1000, 10000}; break;
      case Command::continuity: c.m_list = {1000, 10000, 100000}; break;
      case Command::corollary: c.m_list = {1000, 10000}; break;
      case Command::tusnady: c.m_list = {40000000}; break;
      case Command::figure1: c.m_list = {100, 1000}; break;
      case Command::constants: break;
    }
  }
  if (c.x_list.empty()) c.x_list = {Rational(1, 2), Rational(1, 3)};
  if (c.workers < 1) c.workers = 1;
  return c;
}

int exit_code_for(const VerificationReport& report, bool strict) {
  if (!report.all_pass(Provenance::oracle_instrument)) return exit_code::oracle_failure;
  if (!report.all_pass(Provenance::paper_bound)) return exit_code::bound_failure;
  if (strict && !report.all_pass(Provenance::regression_guard)) return exit_code::bound_failure;
  return exit_code::ok;
}

CommandResult run_command(const RunConfig& raw) {
  const RunConfig c = with_defaults(raw);
  if (c.tau && !(*c.tau >= 2.0)) throw DomainError("tau must be >= 2");
  if (c.z_points && *c.z_points < 2) throw DomainError("z-points must be >= 2");
  CommandResult result;

  if (c.command == Command::figure1) {
    if (c.m_list.size() != 2 || c.m_list[0] > c.m_list[1]) {
      throw DomainError("figure1 takes --m LO,HI");
    }
    const double z = figure1_draw(c.seed);
    const auto series = figure1_series(c.m_list[0], c.m_list[1], z);
    double worst = 0.0;
    for (const auto& p : series) worst = std::max(worst, p.abs_residual);
    VerificationRecord r;
    r.check_id = "figure1.max_residual";
    r.z = z;
    r.measured = worst;
    r.allowed = 1.5;
    r.outcome = std::fabs(z) <= 2.0 ? judge(worst, r.allowed) : Outcome::skipped;
    r.provenance = Provenance::regression_guard;
    result.report.add(std::move(r));
    char buf[96];
    std::snprintf(buf, sizeof buf, "figure1: seed %llu draws z = %.17g",
                  static_cast<unsigned long long>(c.seed), z);
    result.report.note(buf);
    result.output = render_figure(series, c.format);
    result.exit_code = exit_code_for(result.report, c.strict);
    return result;
  }

  try {
    switch (c.command) {
      case Command::llt: result.report = run_llt(c); break;
      case Command::continuity: result.report = run_continuity(c); break;
      case Command::corollary: result.report = run_corollary(c); break;
      case Command::tusnady: result.report = run_tusnady(c); break;
      case Command::constants: result.report = run_constants(c); break;
      case Command::figure1: break;
    }
  } catch (const EvaluationError& e) {
    VerificationRecord r;
    r.check_id = "oracle.error";
    r.measured = 1.0;
    r.allowed = 0.0;
    r.outcome = Outcome::fail;
    r.provenance = Provenance::oracle_instrument;
    result.report.add(std::move(r));
    result.report.note(std::string("oracle error: ") + e.what());
  }
  result.report.sort();
  result.output = render(result.report, c.format);
  result.exit_code = exit_code_for(result.report, c.strict);
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical verification of Binomial normal-approximation bounds", "verify"};
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::string> m_text;
  std::vector<std::string> x_text;
  double tau = 0.0;
  int z_points = 0;
  std::uint64_t seed = 1;
  std::string out_path;
  std::string format = "csv";
  unsigned workers = default_workers();
  bool strict = false;

  std::vector<CLI::App*> subs;
  for (const char* name : {"llt", "continuity", "corollary", "tusnady", "constants", "figure1"}) {
    subs.push_back(app.add_subcommand(name));
  }
  subs[0]->description("local expansion of the pmf against its envelope");
  subs[1]->description("refined continuity-corrected tails");
  subs[2]->description("x = 1/2 continuity correction over the t range");
  subs[3]->description("quantile-coupling residual bound");
  subs[4]->description("supremum constants, Riemann coefficients, Stirling remainder");
  subs[5]->description("one-omega residual series over a range of m");

  auto* m_opt = app.add_option("--m", m_text, "trial counts, comma separated (figure1: LO,HI)")
                    ->delimiter(',')
                    ->envname("TUSNADY_VERIFY_M");
  auto* x_opt = app.add_option("--x", x_text, "success probabilities such as 1/3 or 0.25")
                    ->delimiter(',')
                    ->envname("TUSNADY_VERIFY_X");
  auto* tau_opt = app.add_option("--tau", tau, "tau >= 2 (default: minimal for each x)")->envname("TUSNADY_VERIFY_TAU");
  auto* z_opt = app.add_option("--z-points", z_points, "tusnady grid size / corollary t count")
                    ->envname("TUSNADY_VERIFY_Z_POINTS");
  app.add_option("--seed", seed, "figure1 seed")->envname("TUSNADY_VERIFY_SEED");
  app.add_option("--out", out_path, "output file (default stdout)")->envname("TUSNADY_VERIFY_OUT");
  app.add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->envname("TUSNADY_VERIFY_FORMAT");
  app.add_option("--workers", workers, "worker threads")
      ->check(CLI::PositiveNumber)
      ->envname("TUSNADY_VERIFY_WORKERS");
  app.add_flag("--strict", strict, "regression-guard failures affect the exit code")
      ->envname("TUSNADY_VERIFY_STRICT");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return exit_code::usage;
  }

  RunConfig config;
  for (auto* s : subs) {
    if (s->parsed()) config.command = *parse_command(s->get_name());
  }
  try {
    for (const auto& t : m_text) config.m_list.push_back(parse_count(t));
    for (const auto& t : x_text) config.x_list.push_back(Rational::parse(t));
    if (tau_opt->count() > 0) config.tau = tau;
    if (z_opt->count() > 0) config.z_points = z_points;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code::usage;
  }
  (void)m_opt;
  (void)x_opt;
  config.seed = seed;
  config.output_path = out_path;
  config.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  config.workers = workers;
  config.strict = strict;

  CommandResult result;
  try {
    result = run_command(config);
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const PreconditionError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_code::usage;
  }

  for (const auto& n : result.report.notes) err << "note: " << n << "\n";
  const auto skipped = result.report.count(Outcome::skipped);
  if (skipped > 0) err << "warning: " << skipped << " record(s) skipped\n";

  if (config.output_path.empty()) {
    out << result.output;
  } else {
    std::ofstream file(config.output_path, std::ios::binary);
    if (!file) {
      err << "cannot open " << config.output_path << " for writing\n";
      return exit_code::usage;
    }
    file << result.output;
  }
  err << "passed " << result.report.count(Outcome::pass) << ", failed " << result.report.count(Outcome::fail)
      << ", skipped " << skipped << "; exit " << result.exit_code << "\n";
  return result.exit_code;
}

}  // namespace tusnady
