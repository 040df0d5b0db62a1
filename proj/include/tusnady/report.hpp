#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tusnady {

enum class Outcome { pass, fail, skipped };

/// Where the `allowed` value of a record comes from.
///  paper_bound       a bound stated by the theory being checked
///  regression_guard  an artifact-level threshold frozen from measurements
///  oracle_instrument a health check of the numerical oracle itself
enum class Provenance { paper_bound, regression_guard, oracle_instrument };

std::string_view to_string(Outcome o);
std::string_view to_string(Provenance p);

struct VerificationRecord {
  std::string check_id;
  std::optional<std::int64_t> m;
  std::optional<std::string> x;
  std::optional<double> tau;
  std::optional<std::int64_t> a;
  std::optional<double> z;
  double measured = 0.0;
  double allowed = 0.0;
  Outcome outcome = Outcome::pass;
  Provenance provenance = Provenance::paper_bound;
};

/// pass iff measured <= allowed; NaN fails.
Outcome judge(double measured, double allowed);

struct VerificationReport {
  std::vector<VerificationRecord> records;
  std::vector<std::string> notes;

  void add(VerificationRecord r) { records.push_back(std::move(r)); }
  void note(std::string text) { notes.push_back(std::move(text)); }
  void append(VerificationReport other);

  bool all_pass(Provenance p) const;
  std::size_t count(Outcome o) const;
  std::size_t count(Provenance p, Outcome o) const;

  /// Largest measured/allowed over passing or failing records with the given
  /// id prefix (skipped records ignored); 0 when there are none.
  double worst_ratio(std::string_view id_prefix = {}) const;

  /// Deterministic order: check_id, then m, x, tau, a, z.
  void sort();
};

std::string format_number(double v);
std::string to_csv(const VerificationReport& report);
std::string to_json(const VerificationReport& report);

}  // namespace tusnady
