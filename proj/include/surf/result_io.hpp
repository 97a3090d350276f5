#pragma once

#include <iosfwd>
#include <string>

#include "surf/result.hpp"

namespace surf {

/// JSON result file with keys hard_labels, class_prior, confusions, busyness
/// (null when absent), iterations, converged, and posteriors when requested.
void write_result_json(const InferenceResult& result, std::ostream& out,
                       bool include_posteriors = false);
void write_result_json(const InferenceResult& result, const std::string& path,
                       bool include_posteriors = false);

}  // namespace surf
