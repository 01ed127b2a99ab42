#pragma once

// File formats: dataset and truth CSVs, iteration traces, model snapshots,
// predictions, BBS curves and study tables.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "semicomp/harness.hpp"
#include "semicomp/metrics.hpp"
#include "semicomp/npmle_em.hpp"
#include "semicomp/simulate.hpp"
#include "semicomp/survival.hpp"

namespace semicomp {

// Header y1,delta1,y2,delta2,x1,...,xp. Throws ValidationError for malformed
// rows or records that fail validation.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

// gamma,h1,h2,h3,t1_true,t2_true,c
void write_truth_csv(std::ostream& out, const std::vector<LatentTruth>& truth);
void write_truth_csv(const std::string& path, const std::vector<LatentTruth>& truth);

// iter,obs_loglik,theta,q1,q2,q3,q4
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

nlohmann::json baselines_to_json(const std::array<Baseline, 3>& baselines);
std::array<Baseline, 3> baselines_from_json(const nlohmann::json& j);
std::shared_ptr<const RiskModel> risk_model_from_json(const nlohmann::json& j);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Long format subject,t,pi; pi is n x times.size().
void write_predictions_csv(std::ostream& out, const std::vector<double>& times, const Eigen::MatrixXd& pi);
void write_predictions_csv(const std::string& path, const std::vector<double>& times, const Eigen::MatrixXd& pi);
// t -> pi for every subject.
std::map<double, Eigen::VectorXd> read_predictions_csv(std::istream& in);
std::map<double, Eigen::VectorXd> read_predictions_csv(const std::string& path);

// t,bbs
void write_bbs_csv(std::ostream& out, const BBSCurve& curve);
void write_bbs_csv(const std::string& path, const BBSCurve& curve);
nlohmann::json bbs_summary_json(const BBSCurve& curve);

// transition,t,mean,lower,upper
void write_band_csv(std::ostream& out, const BaselineBand& band);
void write_band_csv(const std::string& path, const BaselineBand& band);

void write_study_csv(std::ostream& out, const StudyTable& table);
void write_study_csv(const std::string& path, const StudyTable& table);
StudyTable read_study_csv(std::istream& in);
StudyTable read_study_csv(const std::string& path);

// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace semicomp
