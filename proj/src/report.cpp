#include "tusnady/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace tusnady {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "true";
    case Outcome::fail: return "false";
    case Outcome::skipped: return "skipped";
  }
  return "false";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::paper_bound: return "paper_bound";
    case Provenance::regression_guard: return "regression_guard";
    case Provenance::oracle_instrument: return "oracle_instrument";
  }
  return "paper_bound";
}

Outcome judge(double measured, double allowed) {
  return measured <= allowed ? Outcome::pass : Outcome::fail;
}

void VerificationReport::append(VerificationReport other) {
  records.insert(records.end(), std::make_move_iterator(other.records.begin()),
                 std::make_move_iterator(other.records.end()));
  notes.insert(notes.end(), std::make_move_iterator(other.notes.begin()),
               std::make_move_iterator(other.notes.end()));
}

bool VerificationReport::all_pass(Provenance p) const {
  return std::none_of(records.begin(), records.end(), [&](const VerificationRecord& r) {
    return r.provenance == p && r.outcome == Outcome::fail;
  });
}

std::size_t VerificationReport::count(Outcome o) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const auto& r) { return r.outcome == o; }));
}

std::size_t VerificationReport::count(Provenance p, Outcome o) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [&](const auto& r) { return r.provenance == p && r.outcome == o; }));
}

double VerificationReport::worst_ratio(std::string_view id_prefix) const {
  double worst = 0.0;
  for (const auto& r : records) {
    if (r.outcome == Outcome::skipped) continue;
    if (r.check_id.compare(0, id_prefix.size(), id_prefix) != 0) continue;
    if (!(r.allowed > 0.0)) continue;
    const double ratio = r.measured / r.allowed;
    if (std::isnan(ratio)) return ratio;
    worst = std::max(worst, ratio);
  }
  return worst;
}

void VerificationReport::sort() {
  std::stable_sort(records.begin(), records.end(), [](const auto& l, const auto& r) {
    return std::tie(l.check_id, l.m, l.x, l.tau, l.a, l.z) < std::tie(r.check_id, r.m, r.x, r.tau, r.a, r.z);
  });
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, double>) {
    return format_number(*v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

std::string to_csv(const VerificationReport& report) {
  std::string out = "check_id,m,x,tau,a,z,measured,allowed,passed,provenance\n";
  for (const auto& r : report.records) {
    out += r.check_id;
    for (const std::string& c : {cell(r.m), cell(r.x), cell(r.tau), cell(r.a), cell(r.z),
                                 format_number(r.measured), format_number(r.allowed)}) {
      out += ',';
      out += c;
    }
    out += ',';
    out += to_string(r.outcome);
    out += ',';
    out += to_string(r.provenance);
    out += '\n';
  }
  return out;
}

std::string to_json(const VerificationReport& report) {
  auto number = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json j;
    j["check_id"] = r.check_id;
    j["m"] = r.m ? nlohmann::json(*r.m) : nlohmann::json(nullptr);
    j["x"] = r.x ? nlohmann::json(*r.x) : nlohmann::json(nullptr);
    j["tau"] = r.tau ? number(*r.tau) : nlohmann::json(nullptr);
    j["a"] = r.a ? nlohmann::json(*r.a) : nlohmann::json(nullptr);
    j["z"] = r.z ? number(*r.z) : nlohmann::json(nullptr);
    j["measured"] = number(r.measured);
    j["allowed"] = number(r.allowed);
    if (r.outcome == Outcome::skipped) {
      j["passed"] = "skipped";
    } else {
      j["passed"] = r.outcome == Outcome::pass;
    }
    j["provenance"] = std::string(to_string(r.provenance));
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace tusnady
