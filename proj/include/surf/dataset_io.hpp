#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "surf/dataset.hpp"

namespace surf {

struct DatasetFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-delimited dataset format: a header object {"L":..,"N":..,"K":..}
/// followed by one record per item, {"i":..,"truth":..,"clf":..,"fb":{"<k>":<label>,..}}
/// with "truth" optional (all records or none). Unknown fields are rejected.
void write_dataset_jsonl(const FeedbackDataset& ds, std::ostream& out);
void write_dataset_jsonl(const FeedbackDataset& ds, const std::string& path);

FeedbackDataset read_dataset_jsonl(std::istream& in);
FeedbackDataset read_dataset_jsonl(const std::string& path);

}  // namespace surf
