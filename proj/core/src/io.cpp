#include "semicomp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "semicomp/errors.hpp"
#include "semicomp/neural.hpp"

namespace semicomp {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t");
    const auto b = cell.find_last_not_of(" \t");
    cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    // from_chars rejects "inf"/"nan" spellings on some libraries; let strtod try.
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
      throw ValidationError("line " + std::to_string(line) + ": column " + column + ": '" + s + "' is not a number");
    }
  }
  return v;
}

int parse_indicator(const std::string& s, std::size_t line, const std::string& column) {
  const double v = parse_double(s, line, column);
  if (v != 0.0 && v != 1.0) {
    throw ValidationError("line " + std::to_string(line) + ": column " + column + ": indicator must be 0 or 1");
  }
  return static_cast<int>(v);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

template <class Fn>
void write_to(const std::string& path, Fn fn) {
  auto out = open_out(path);
  fn(out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) s += ',';
    s += cells[k];
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset CSV is empty");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed{"y1", "delta1", "y2", "delta2"};
  if (header.size() < 4 || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw ValidationError("dataset CSV header must start with y1,delta1,y2,delta2");
  }
  const std::size_t width = header.size();
  std::vector<ObservedRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(cells.size()));
    }
    ObservedRecord r;
    r.y1 = parse_double(cells[0], lineno, "y1");
    r.delta1 = parse_indicator(cells[1], lineno, "delta1");
    r.y2 = parse_double(cells[2], lineno, "y2");
    r.delta2 = parse_indicator(cells[3], lineno, "delta2");
    for (std::size_t k = 4; k < width; ++k) r.covariates.push_back(parse_double(cells[k], lineno, header[k]));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError("dataset CSV has no records");
  return Dataset(std::move(records));
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "y1,delta1,y2,delta2";
  for (Eigen::Index j = 0; j < data.num_covariates(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (const auto& r : data) {
    out << format_double(r.y1) << ',' << r.delta1 << ',' << format_double(r.y2) << ',' << r.delta2;
    for (double x : r.covariates) out << ',' << format_double(x);
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  write_to(path, [&](std::ostream& o) { write_dataset_csv(o, data); });
}

void write_truth_csv(std::ostream& out, const std::vector<LatentTruth>& truth) {
  out << "gamma,h1,h2,h3,t1_true,t2_true,c\n";
  for (const auto& t : truth) {
    out << format_double(t.gamma) << ',' << format_double(t.h[0]) << ',' << format_double(t.h[1]) << ','
        << format_double(t.h[2]) << ',' << format_double(t.t1) << ',' << format_double(t.t2) << ','
        << format_double(t.c) << '\n';
  }
}

void write_truth_csv(const std::string& path, const std::vector<LatentTruth>& truth) {
  write_to(path, [&](std::ostream& o) { write_truth_csv(o, truth); });
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "iter,obs_loglik,theta,q1,q2,q3,q4\n";
  for (const auto& row : trace) {
    out << row.iter << ',' << format_double(row.obs_loglik) << ',' << format_double(row.theta) << ','
        << format_double(row.q.q1) << ',' << format_double(row.q.q2) << ',' << format_double(row.q.q3) << ','
        << format_double(row.q.q4) << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  write_to(path, [&](std::ostream& o) { write_trace_csv(o, trace); });
}

nlohmann::json baselines_to_json(const std::array<Baseline, 3>& baselines) {
  nlohmann::json out = nlohmann::json::array();
  for (int g = 0; g < 3; ++g) {
    if (const auto* s = std::get_if<StepHazard>(&baselines[g])) {
      out.push_back({{"transition", g + 1}, {"jump_times", s->jump_times()}, {"jump_sizes", s->jump_sizes()}});
    } else {
      const auto& w = std::get<WeibullHazard>(baselines[g]);
      out.push_back({{"transition", g + 1}, {"phi1", w.phi1}, {"phi2", w.phi2}});
    }
  }
  return out;
}

std::array<Baseline, 3> baselines_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("baselines: expected three entries");
  std::array<Baseline, 3> out;
  std::array<bool, 3> seen{false, false, false};
  for (const auto& e : j) {
    const int g = e.at("transition").get<int>() - 1;
    if (g < 0 || g > 2 || seen[g]) throw std::invalid_argument("baselines: bad or repeated transition index");
    seen[g] = true;
    if (e.contains("jump_times")) {
      out[g] = StepHazard(e.at("jump_times").get<std::vector<double>>(), e.at("jump_sizes").get<std::vector<double>>());
    } else {
      out[g] = WeibullHazard{e.at("phi1").get<double>(), e.at("phi2").get<double>()};
    }
  }
  return out;
}

std::shared_ptr<const RiskModel> risk_model_from_json(const nlohmann::json& j) {
  const std::string type = j.value("type", std::string());
  if (type == "zero") return make_zero_risk();
  if (type == "linear") {
    const auto& b = j.at("beta");
    if (b.size() != 3) throw std::invalid_argument("linear risk: expected three coefficient vectors");
    std::array<Eigen::VectorXd, 3> beta;
    for (std::size_t g = 0; g < 3; ++g) {
      const auto v = b[g].get<std::vector<double>>();
      beta[g] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return std::make_shared<const LinearRisk>(std::move(beta));
  }
  if (type == "neural") return std::make_shared<const NeuralRisk>(NeuralRisk::from_json(j));
  throw std::invalid_argument("risk_model: unsupported type '" + type + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_to(path, [&](std::ostream& o) { o << std::setw(2) << j << '\n'; });
}

nlohmann::json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_predictions_csv(std::ostream& out, const std::vector<double>& times, const Eigen::MatrixXd& pi) {
  if (pi.cols() != static_cast<Eigen::Index>(times.size())) {
    throw std::invalid_argument("write_predictions_csv: one column per time expected");
  }
  out << "subject,t,pi\n";
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      out << i << ',' << format_double(times[k]) << ',' << format_double(pi(i, static_cast<Eigen::Index>(k))) << '\n';
    }
  }
}

void write_predictions_csv(const std::string& path, const std::vector<double>& times, const Eigen::MatrixXd& pi) {
  write_to(path, [&](std::ostream& o) { write_predictions_csv(o, times, pi); });
}

std::map<double, Eigen::VectorXd> read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"subject", "t", "pi"}) {
    throw ValidationError("predictions CSV header must be subject,t,pi");
  }
  std::map<double, std::map<long, double>> cells;
  long max_subject = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 3) throw ValidationError("line " + std::to_string(lineno) + ": expected 3 fields");
    const double s = parse_double(c[0], lineno, "subject");
    if (s < 0 || s != std::floor(s)) throw ValidationError("line " + std::to_string(lineno) + ": bad subject index");
    const auto subject = static_cast<long>(s);
    const double pi = parse_double(c[2], lineno, "pi");
    if (!(pi >= 0.0 && pi <= 1.0)) throw ValidationError("line " + std::to_string(lineno) + ": pi outside [0,1]");
    cells[parse_double(c[1], lineno, "t")][subject] = pi;
    max_subject = std::max(max_subject, subject);
  }
  std::map<double, Eigen::VectorXd> out;
  for (const auto& [t, by_subject] : cells) {
    if (static_cast<long>(by_subject.size()) != max_subject + 1) {
      throw ValidationError("predictions CSV: time " + format_double(t) + " does not cover every subject");
    }
    Eigen::VectorXd v(max_subject + 1);
    for (const auto& [i, p] : by_subject) v(i) = p;
    out.emplace(t, std::move(v));
  }
  return out;
}

std::map<double, Eigen::VectorXd> read_predictions_csv(const std::string& path) {
  auto in = open_in(path);
  return read_predictions_csv(in);
}

void write_bbs_csv(std::ostream& out, const BBSCurve& curve) {
  out << "t,bbs\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    out << format_double(curve.grid[k]) << ',' << format_double(curve.values[k]) << '\n';
  }
}

void write_bbs_csv(const std::string& path, const BBSCurve& curve) {
  write_to(path, [&](std::ostream& o) { write_bbs_csv(o, curve); });
}

nlohmann::json bbs_summary_json(const BBSCurve& curve) {
  return {{"ibbs", curve.integrated}, {"horizon", curve.horizon}, {"n_points", curve.n_points},
          {"truncated", curve.truncated}};
}

void write_band_csv(std::ostream& out, const BaselineBand& band) {
  out << "transition,t,mean,lower,upper\n";
  for (int g = 0; g < 3; ++g) {
    for (std::size_t k = 0; k < band.grid.size(); ++k) {
      out << (g + 1) << ',' << format_double(band.grid[k]) << ',' << format_double(band.mean[g][k]) << ','
          << format_double(band.lower[g][k]) << ',' << format_double(band.upper[g][k]) << '\n';
    }
  }
}

void write_band_csv(const std::string& path, const BaselineBand& band) {
  write_to(path, [&](std::ostream& o) { write_band_csv(o, band); });
}

void write_study_csv(std::ostream& out, const StudyTable& table) {
  out << join(table.columns) << '\n';
  for (const auto& row : table.rows) out << join(row) << '\n';
}

void write_study_csv(const std::string& path, const StudyTable& table) {
  write_to(path, [&](std::ostream& o) { write_study_csv(o, table); });
}

StudyTable read_study_csv(std::istream& in) {
  StudyTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("study CSV is empty");
  table.columns = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = split_csv_line(line);
    if (row.size() != table.columns.size()) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(table.columns.size()) +
                            " fields");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

StudyTable read_study_csv(const std::string& path) {
  auto in = open_in(path);
  return read_study_csv(in);
}

}  // namespace semicomp
