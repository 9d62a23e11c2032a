#pragma once

#include "eftc/enrich.hpp"
#include "eftc/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eftc {

enum class Delimiter { Auto, Tab, Comma, Whitespace };

/// Parses "auto", "tab", "comma", "whitespace" (also "\t", ",", " ").
Delimiter parse_delimiter(std::string_view name);

/// Sorted distinct label values of a dataset; index = class id.
struct LabelEncoder {
  std::vector<double> values;
  int encode(double label) const;  // LabelMismatch if unseen
};

/// Reads a label-first time-series file (one curve per row). Labels are
/// mapped to 0..C-1 in ascending order of their values, or through
/// `encoder` (the training set's mapping) when given. The time grid is
/// T equispaced points on [0, 1].
/// Errors: missing file -> IoError, ragged rows -> RaggedFile,
/// non-numeric or non-finite fields -> ParseError, unseen label -> LabelMismatch.
CurveSet load_ucr(const std::filesystem::path& path, Delimiter delimiter = Delimiter::Auto,
                  const LabelEncoder* encoder = nullptr);
LabelEncoder encoder_of(const CurveSet& curves);

/// Tab-separated label-first rows; values are written in their shortest
/// exact form (never more than 17 significant digits).
void save_ucr(const std::filesystem::path& path, const CurveSet& curves);

/// Shortest text that reads back to exactly `v` (at most 17 digits).
std::string format_double(double v);

struct DatasetManifest {
  std::string name;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  int train_n = 0;
  int test_n = 0;
  int length = 0;
  int n_classes = 0;
};

/// Published sizes of the seven archive datasets (Car, ECG200, ECGFiveDays,
/// ItalyPowerDemand, Plane, Trace, TwoLeadECG); paths resolved under `dir`
/// as <dir>/<name>_TRAIN.<ext> with ext in tsv, txt, csv.
std::optional<DatasetManifest> known_dataset(const std::string& name, const std::filesystem::path& dir = {});
std::vector<std::string> known_dataset_names();

/// Human-readable mismatches between observed and expected sizes; empty
/// when everything agrees.
std::vector<std::string> validate_manifest(const DatasetManifest& manifest, const CurveSet& train,
                                           const CurveSet& test);

/// EnrichedMatrix CSV: header `label,<TAG>_<s>,...`, integer class labels.
/// Saving rejects non-finite entries (NonFiniteInput). Loading restores the
/// block layout from the header when the names follow that pattern.
void save_matrix(const std::filesystem::path& path, const EnrichedMatrix& m);
EnrichedMatrix load_matrix(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const Classifier& model);
Classifier load_model(const std::filesystem::path& path);

struct RunRecord {
  std::string dataset;
  std::string method;
  bool enriched = false;
  int run_id = 0;
  std::uint64_t seed = 0;
  nlohmann::json hyperparams = nlohmann::json::object();
  double accuracy = 0.0;
  double train_seconds = 0.0;

  bool operator==(const RunRecord&) const = default;
};

/// CSV with header dataset,method,enriched,run_id,seed,hyperparams_json,accuracy,train_seconds.
void save_runs(const std::filesystem::path& path, const std::vector<RunRecord>& runs);
std::string runs_to_csv(const std::vector<RunRecord>& runs);
std::vector<RunRecord> load_runs(const std::filesystem::path& path);

/// One CSV record split into fields (RFC 4180 quoting).
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace eftc
