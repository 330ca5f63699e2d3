#pragma once

#include <json.hpp>
#include <string>

#include "oqe/memory_metrics.hpp"
#include "oqe/reconstruction.hpp"
#include "oqe/tomography.hpp"

namespace oqe {

using Json = nlohmann::json;

// Complex payloads are stored as interleaved real/imag doubles in row-major
// order; JSON doubles use the shortest round-trip representation, so a value
// survives write/read bit for bit.

Json model_to_json(const OqeModel& model);
OqeModel model_from_json(const Json& j);

Json ppt_to_json(const Ppt& ppt);
Ppt ppt_from_json(const Json& j);

Json transcript_to_json(const TomographyTranscript& t);

/// Fit report: mode, seeds, final loss, per-iteration records, recovered
/// model and environment gauge.
Json fit_report_to_json(const ReconstructedOqe& rec, FitMode mode,
                        const OptimizerSettings& settings);

/// Metric sweep rows as CSV with columns
/// (j, memory_size, complexity_gamma, gamma, predicted_limit, seed).
std::string metric_sweep_to_csv(const std::vector<MetricSweepRow>& rows);

/// Shortest decimal form of a double that parses back to the same bits.
std::string format_double(double value);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

void save_json(const Json& j, const std::string& path);
Json load_json(const std::string& path);

} // namespace oqe
