#include "survinfo/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "survinfo/errors.hpp"

namespace survinfo {

namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_number(std::string_view field, std::size_t line,
                    std::string_view column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(line, "non-numeric value '" + std::string(field) +
                               "' in column '" + std::string(column) + "'");
  }
  return value;
}

void validate(const Observation& o, std::size_t p, std::size_t index) {
  const auto where = "observation " + std::to_string(index) + ": ";
  if (!(o.time >= 0.0) || !std::isfinite(o.time)) {
    throw InputError("InvalidObservation", where + "negative or non-finite time");
  }
  if (o.status != 0 && o.status != 1) {
    throw InputError("InvalidObservation", where + "status must be 0 or 1");
  }
  if (static_cast<std::size_t>(o.covariates.size()) != p) {
    throw InputError("InvalidObservation", where + "covariate length " +
                                               std::to_string(o.covariates.size()) +
                                               " != " + std::to_string(p));
  }
}

}  // namespace

Dataset::Dataset(std::vector<Observation> observations, std::size_t p,
                 std::vector<std::string> covariate_names)
    : obs_(std::move(observations)), p_(p), names_(std::move(covariate_names)) {
  if (obs_.empty()) throw InputError("EmptyDataset", "dataset has no observations");
  for (std::size_t i = 0; i < obs_.size(); ++i) validate(obs_[i], p_, i);
  if (names_.empty()) {
    for (std::size_t k = 0; k < p_; ++k) names_.push_back("z" + std::to_string(k + 1));
  } else if (names_.size() != p_) {
    throw InputError("InvalidDataset", "covariate name count does not match p");
  }
}

std::size_t Dataset::events() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      obs_.begin(), obs_.end(), [](const Observation& o) { return o.event(); }));
}

Dataset Dataset::without_zero_censored() const {
  std::vector<Observation> kept;
  std::copy_if(obs_.begin(), obs_.end(), std::back_inserter(kept),
               [](const Observation& o) { return o.event() || o.time > 0.0; });
  return Dataset(std::move(kept), p_, names_);
}

DatasetSummary summary(const Dataset& d) {
  DatasetSummary s;
  s.n = d.size();
  s.events = d.events();
  s.censored = s.n - s.events;
  s.uncensored_fraction = static_cast<double>(s.events) / static_cast<double>(s.n);
  return s;
}

Dataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;

  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");

  for (auto f : split_fields(line)) header.emplace_back(f);
  if (header.size() < 2 || header[0] != "time" || header[1] != "status") {
    throw ParseError(line_no, "malformed header: expected 'time,status[,z1,...]'");
  }
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k].empty()) {
      throw ParseError(line_no, "malformed header: empty covariate name");
    }
  }
  const std::size_t p = header.size() - 2;
  std::vector<std::string> names(header.begin() + 2, header.end());

  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != p + 2) {
      throw ParseError(line_no, "expected " + std::to_string(p + 2) +
                                    " fields, found " + std::to_string(fields.size()));
    }
    Observation o;
    o.time = parse_number(fields[0], line_no, "time");
    if (o.time < 0.0) throw ParseError(line_no, "negative time");
    if (fields[1] == "0") {
      o.status = 0;
    } else if (fields[1] == "1") {
      o.status = 1;
    } else {
      throw ParseError(line_no, "status must be 0 or 1, found '" +
                                    std::string(fields[1]) + "'");
    }
    o.covariates.resize(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k) {
      o.covariates[static_cast<Eigen::Index>(k)] =
          parse_number(fields[k + 2], line_no, names[k]);
    }
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw ParseError(line_no, "no data rows");
  return Dataset(std::move(obs), p, std::move(names));
}

Dataset parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& d) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "time,status";
  for (const auto& name : d.covariate_names()) out << ',' << name;
  out << '\n';
  for (const auto& o : d) {
    out << o.time << ',' << o.status;
    for (Eigen::Index k = 0; k < o.covariates.size(); ++k) out << ',' << o.covariates[k];
    out << '\n';
  }
  out.precision(old_precision);
}

std::string to_csv(const Dataset& d) {
  std::ostringstream out;
  write_csv(out, d);
  return out.str();
}

namespace {

struct Arm {
  std::array<double, 12> time;
  std::array<int, 12> status;
  std::size_t size;
};

// Maintenance chemotherapy arm (Z = 0) and control arm (Z = 1).
constexpr Arm kMaintained{{9, 13, 13, 18, 23, 28, 31, 34, 45, 48, 161, 0},
                          {1, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 0},
                          11};
constexpr Arm kNonmaintained{{5, 5, 8, 8, 12, 16, 23, 27, 30, 33, 43, 45},
                             {1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1},
                             12};

void append_arm(std::vector<Observation>& out, const Arm& arm, double z,
                bool pad_with_zero_censored, bool all_events) {
  Eigen::VectorXd cov(1);
  cov[0] = z;
  if (pad_with_zero_censored) {
    for (std::size_t i = 0; i < arm.size; ++i) out.push_back({0.0, 0, cov});
  }
  for (std::size_t i = 0; i < arm.size; ++i) {
    out.push_back({arm.time[i], all_events ? 1 : arm.status[i], cov});
  }
}

}  // namespace

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"aml-orig", "aml-1", "aml-2"};
  return names;
}

Dataset fixture(std::string_view name) {
  bool pad = false;
  bool all_events = false;
  if (name == "aml-orig") {
  } else if (name == "aml-1") {
    pad = true;
    all_events = true;
  } else if (name == "aml-2") {
    pad = true;
  } else {
    throw InputError("UnknownFixture", "unknown fixture '" + std::string(name) +
                                           "' (expected aml-orig, aml-1 or aml-2)");
  }
  std::vector<Observation> obs;
  append_arm(obs, kMaintained, 0.0, pad, all_events);
  append_arm(obs, kNonmaintained, 1.0, pad, all_events);
  return Dataset(std::move(obs), 1);
}

}  // namespace survinfo
