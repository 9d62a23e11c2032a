#include "eftc/dataio.hpp"
#include "eftc/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace eftc {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EFTC_REQUIRE(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  EFTC_REQUIRE(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  EFTC_REQUIRE(out.good(), ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    pos = end + 1;
  }
  return out;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line, Delimiter d) {
  std::vector<std::string> out;
  if (d == Delimiter::Whitespace) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  const char sep = d == Delimiter::Tab ? '\t' : ',';
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_number(const std::string& field, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  EFTC_REQUIRE(res.ec == std::errc() && res.ptr == last && first != last && std::isfinite(v), ErrorCode::ParseError,
               path.string() + ":" + std::to_string(line_no) + ": '" + field + "' is not a finite number");
  return v;
}

}  // namespace

Delimiter parse_delimiter(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "auto") return Delimiter::Auto;
  if (s == "tab" || s == "\t" || s == "\\t") return Delimiter::Tab;
  if (s == "comma" || s == ",") return Delimiter::Comma;
  if (s == "whitespace" || s == "space" || s == " ") return Delimiter::Whitespace;
  throw Error(ErrorCode::InvalidParam, "unknown delimiter '" + std::string(name) + "'");
}

int LabelEncoder::encode(double label) const {
  auto it = std::lower_bound(values.begin(), values.end(), label);
  EFTC_REQUIRE(it != values.end() && *it == label, ErrorCode::LabelMismatch,
               "label " + format_double(label) + " does not occur in the training labels");
  return static_cast<int>(it - values.begin());
}

LabelEncoder encoder_of(const CurveSet& curves) { return {curves.class_values}; }

CurveSet load_ucr(const fs::path& path, Delimiter delimiter, const LabelEncoder* encoder) {
  const std::string text = read_text_file(path);
  const auto lines = lines_of(text);
  if (delimiter == Delimiter::Auto) {
    delimiter = Delimiter::Whitespace;
    for (const auto& l : lines) {
      if (blank(l)) continue;
      if (l.find('\t') != std::string::npos)
        delimiter = Delimiter::Tab;
      else if (l.find(',') != std::string::npos)
        delimiter = Delimiter::Comma;
      break;
    }
  }

  std::vector<double> raw_labels;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (blank(lines[n])) continue;
    const auto fields = split_fields(lines[n], delimiter);
    if (rows.empty()) width = fields.size();
    EFTC_REQUIRE(fields.size() == width, ErrorCode::RaggedFile,
                 path.string() + ":" + std::to_string(n + 1) + ": " + std::to_string(fields.size()) +
                     " fields, expected " + std::to_string(width));
    EFTC_REQUIRE(width >= 2, ErrorCode::ParseError, path.string() + ": rows need a label and at least one value");
    raw_labels.push_back(parse_number(fields[0], path, n + 1));
    std::vector<double> v;
    v.reserve(width - 1);
    for (std::size_t f = 1; f < width; ++f) v.push_back(parse_number(fields[f], path, n + 1));
    rows.push_back(std::move(v));
  }
  EFTC_REQUIRE(!rows.empty(), ErrorCode::EmptyInput, path.string() + " holds no curves");

  LabelEncoder own;
  if (encoder == nullptr) {
    own.values = raw_labels;
    std::sort(own.values.begin(), own.values.end());
    own.values.erase(std::unique(own.values.begin(), own.values.end()), own.values.end());
    encoder = &own;
  }

  CurveSet cs;
  cs.name = path.stem().string();
  cs.time_grid = equispaced_grid(width - 1);
  cs.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j)
      cs.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    cs.labels.push_back(encoder->encode(raw_labels[i]));
  }
  cs.class_values = encoder->values;
  cs.n_classes = static_cast<int>(cs.class_values.size());
  return cs;
}

void save_ucr(const fs::path& path, const CurveSet& curves) {
  curves.validate();
  std::string out;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const int y = curves.labels[i];
    out += static_cast<std::size_t>(y) < curves.class_values.size()
               ? format_double(curves.class_values[static_cast<std::size_t>(y)])
               : std::to_string(y);
    for (Eigen::Index j = 0; j < curves.values.cols(); ++j) {
      out += '\t';
      out += format_double(curves.values(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

// --- manifests -------------------------------------------------------------

namespace {

struct Published {
  const char* name;
  int train, test, length, classes;
};

constexpr Published kPublished[] = {
    {"Car", 60, 60, 577, 4},       {"ECG200", 100, 100, 96, 2},
    {"ECGFiveDays", 23, 861, 136, 2}, {"ItalyPowerDemand", 67, 1029, 24, 2},
    {"Plane", 105, 105, 144, 7},   {"Trace", 100, 100, 275, 4},
    {"TwoLeadECG", 23, 1139, 82, 2},
};

fs::path find_split(const fs::path& dir, const std::string& name, const char* split) {
  for (const char* ext : {".tsv", ".txt", ".csv", ""}) {
    for (const fs::path& base : {dir / name, dir}) {
      fs::path p = base / (name + "_" + split + ext);
      if (fs::exists(p)) return p;
    }
  }
  return dir / name / (name + "_" + split + ".tsv");
}

}  // namespace

std::vector<std::string> known_dataset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPublished) out.emplace_back(p.name);
  return out;
}

std::optional<DatasetManifest> known_dataset(const std::string& name, const fs::path& dir) {
  for (const auto& p : kPublished) {
    if (name != p.name) continue;
    DatasetManifest m{p.name, find_split(dir, p.name, "TRAIN"), find_split(dir, p.name, "TEST"),
                      p.train, p.test, p.length, p.classes};
    return m;
  }
  return std::nullopt;
}

std::vector<std::string> validate_manifest(const DatasetManifest& m, const CurveSet& train, const CurveSet& test) {
  std::vector<std::string> issues;
  auto check = [&](const char* what, std::size_t got, int want) {
    if (static_cast<long long>(got) != want)
      issues.push_back(m.name + ": " + what + " is " + std::to_string(got) + ", expected " + std::to_string(want));
  };
  check("train size", train.size(), m.train_n);
  check("test size", test.size(), m.test_n);
  check("train length", train.length(), m.length);
  check("test length", test.length(), m.length);
  std::set<int> classes(train.labels.begin(), train.labels.end());
  check("number of classes", classes.size(), m.n_classes);
  return issues;
}

// --- matrices --------------------------------------------------------------

void save_matrix(const fs::path& path, const EnrichedMatrix& m) {
  EFTC_REQUIRE(m.features.allFinite(), ErrorCode::NonFiniteInput, "matrix contains NaN or Inf");
  EFTC_REQUIRE(m.features.rows() == static_cast<Eigen::Index>(m.labels.size()), ErrorCode::DimensionMismatch,
               "label count differs from row count");
  EFTC_REQUIRE(m.layout.width() == m.features.cols(), ErrorCode::DimensionMismatch,
               "layout width differs from column count");
  std::string out = "label";
  for (int c = 0; c < m.layout.width(); ++c) out += "," + m.layout.column_name(c);
  out += '\n';
  for (Eigen::Index i = 0; i < m.features.rows(); ++i) {
    out += std::to_string(m.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < m.features.cols(); ++c) {
      out += ',';
      out += format_double(m.features(i, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

EnrichedMatrix load_matrix(const fs::path& path) {
  const auto lines = lines_of(read_text_file(path));
  std::size_t first = 0;
  while (first < lines.size() && blank(lines[first])) ++first;
  EFTC_REQUIRE(first < lines.size(), ErrorCode::EmptyInput, path.string() + " is empty");
  const auto header = split_fields(lines[first], Delimiter::Comma);
  EFTC_REQUIRE(header.size() >= 2 && header[0] == "label", ErrorCode::ParseError,
               path.string() + ": header must start with 'label'");

  // <TAG>_<s> names in canonical block order, s running 1..S per block
  std::vector<Block> blocks;
  int S = -1;
  {
    std::map<Block, int> count;
    for (std::size_t c = 1; c < header.size(); ++c) {
      const auto us = header[c].rfind('_');
      EFTC_REQUIRE(us != std::string::npos, ErrorCode::ParseError, "bad column name '" + header[c] + "'");
      const Block b = parse_block(header[c].substr(0, us));
      const int s = std::stoi(header[c].substr(us + 1));
      if (blocks.empty() || blocks.back() != b) blocks.push_back(b);
      EFTC_REQUIRE(s == ++count[b], ErrorCode::ParseError, "column '" + header[c] + "' out of order");
    }
    for (auto& [b, n] : count) {
      if (S < 0) S = n;
      EFTC_REQUIRE(n == S, ErrorCode::ParseError, "blocks differ in width");
    }
  }
  EnrichedMatrix m;
  m.layout = BlockLayout(blocks, S);
  EFTC_REQUIRE(m.layout.blocks() == blocks, ErrorCode::ParseError, "blocks are not in canonical order");

  std::vector<std::vector<double>> rows;
  for (std::size_t n = first + 1; n < lines.size(); ++n) {
    if (blank(lines[n])) continue;
    const auto fields = split_fields(lines[n], Delimiter::Comma);
    EFTC_REQUIRE(fields.size() == header.size(), ErrorCode::RaggedFile,
                 path.string() + ":" + std::to_string(n + 1) + ": field count differs from header");
    const double label = parse_number(fields[0], path, n + 1);
    EFTC_REQUIRE(label >= 0 && label == std::floor(label), ErrorCode::ParseError,
                 path.string() + ":" + std::to_string(n + 1) + ": label must be a non-negative integer");
    m.labels.push_back(static_cast<int>(label));
    std::vector<double> v;
    for (std::size_t f = 1; f < fields.size(); ++f) v.push_back(parse_number(fields[f], path, n + 1));
    rows.push_back(std::move(v));
  }
  m.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      m.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  m.n_classes = m.labels.empty() ? 0 : *std::max_element(m.labels.begin(), m.labels.end()) + 1;
  return m;
}

// --- models ----------------------------------------------------------------

void save_model(const fs::path& path, const Classifier& model) { write_text_file(path, to_json(model).dump(1) + "\n"); }

Classifier load_model(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return classifier_from_json(doc);
}

// --- run records -----------------------------------------------------------

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  EFTC_REQUIRE(!quoted, ErrorCode::ParseError, "unterminated quoted CSV field");
  out.push_back(std::move(cur));
  return out;
}

namespace {
constexpr const char* kRunsHeader = "dataset,method,enriched,run_id,seed,hyperparams_json,accuracy,train_seconds";
}

std::string runs_to_csv(const std::vector<RunRecord>& runs) {
  std::string out = std::string(kRunsHeader) + "\n";
  for (const RunRecord& r : runs) {
    EFTC_REQUIRE(std::isfinite(r.accuracy) && r.accuracy >= 0.0 && r.accuracy <= 1.0, ErrorCode::InvalidParam,
                 "run accuracy must lie in [0, 1]");
    out += csv_escape(r.dataset) + "," + csv_escape(r.method) + "," + (r.enriched ? "1" : "0") + "," +
           std::to_string(r.run_id) + "," + std::to_string(r.seed) + "," + csv_escape(r.hyperparams.dump()) + "," +
           format_double(r.accuracy) + "," + format_double(r.train_seconds) + "\n";
  }
  return out;
}

void save_runs(const fs::path& path, const std::vector<RunRecord>& runs) { write_text_file(path, runs_to_csv(runs)); }

std::vector<RunRecord> load_runs(const fs::path& path) {
  const auto lines = lines_of(read_text_file(path));
  EFTC_REQUIRE(!lines.empty() && lines[0] == kRunsHeader, ErrorCode::ParseError,
               path.string() + ": missing run-record header");
  std::vector<RunRecord> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (blank(lines[n])) continue;
    const auto f = split_csv_line(lines[n]);
    const std::string where = path.string() + ":" + std::to_string(n + 1);
    EFTC_REQUIRE(f.size() == 8, ErrorCode::RaggedFile, where + ": expected 8 fields");
    RunRecord r;
    r.dataset = f[0];
    r.method = f[1];
    EFTC_REQUIRE(f[2] == "0" || f[2] == "1", ErrorCode::ParseError, where + ": enriched must be 0 or 1");
    r.enriched = f[2] == "1";
    try {
      std::size_t used = 0;
      r.run_id = std::stoi(f[3], &used);
      EFTC_REQUIRE(used == f[3].size(), ErrorCode::ParseError, where + ": bad run_id");
      r.seed = std::stoull(f[4], &used);
      EFTC_REQUIRE(used == f[4].size(), ErrorCode::ParseError, where + ": bad seed");
      r.hyperparams = nlohmann::json::parse(f[5]);
    } catch (const std::logic_error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    r.accuracy = parse_number(f[6], path, n + 1);
    r.train_seconds = parse_number(f[7], path, n + 1);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace eftc
