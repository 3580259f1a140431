#pragma once

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "stratkit/common.hpp"

namespace stratkit {

enum class CancerType {
  lung,
  prostate,
  breast,
  ovarian,
  pancreas,
  colon_rectum,
  liver
};
inline constexpr int kNumCancerTypes = 7;

enum class Gender { male, female };
enum class FeatureKind { phenotype, genetic, demographic };

inline const char* to_string(CancerType t) {
  switch (t) {
    case CancerType::lung: return "lung";
    case CancerType::prostate: return "prostate";
    case CancerType::breast: return "breast";
    case CancerType::ovarian: return "ovarian";
    case CancerType::pancreas: return "pancreas";
    case CancerType::colon_rectum: return "colon_rectum";
    case CancerType::liver: return "liver";
  }
  return "?";
}

inline std::optional<CancerType> cancer_from_string(const std::string& s) {
  for (int i = 0; i < kNumCancerTypes; ++i) {
    auto t = static_cast<CancerType>(i);
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::phenotype: return "phenotype";
    case FeatureKind::genetic: return "genetic";
    case FeatureKind::demographic: return "demographic";
  }
  return "?";
}

inline std::optional<FeatureKind> kind_from_string(const std::string& s) {
  if (s == "phenotype") return FeatureKind::phenotype;
  if (s == "genetic") return FeatureKind::genetic;
  if (s == "demographic") return FeatureKind::demographic;
  return std::nullopt;
}

// One patient's categorical features. Mutation tokens are stored in the
// "<gene>-PATH" / "<gene>-VUS" form so the variant class travels with the
// token through the whole pipeline.
struct PatientRecord {
  std::string patient_id;
  std::vector<std::string> phenotypes;  // deduplicated, input order
  std::vector<std::string> mutations;   // deduplicated, input order
  Gender gender = Gender::male;
  CancerType label = CancerType::lung;
};

namespace detail {

inline std::vector<std::string> dedup_keep_order(
    const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens) {
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

}  // namespace detail

// Parses a JSON-lines cohort file, one record per line:
//   {"patient_id": "...", "phenotypes": [...],
//    "mutations": [{"gene": "...", "class": "PATH"|"VUS"}, ...],
//    "gender": "male"|"female", "label": "<cancer type>"}
inline std::vector<PatientRecord> load_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(str_cat("cannot open cohort file: ", path));

  std::vector<PatientRecord> records;
  std::unordered_map<std::string, std::size_t> seen_ids;  // id -> first line
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(str_cat(path, ": line ", lineno,
                              ": malformed record: ", e.what()));
    }
    auto fail = [&](const std::string& what) -> DataError {
      return DataError(str_cat(path, ": line ", lineno, ": ", what));
    };
    if (!j.is_object()) throw fail("record is not a JSON object");
    for (const char* key :
         {"patient_id", "phenotypes", "mutations", "gender", "label"}) {
      if (!j.contains(key)) throw fail(str_cat("missing key '", key, "'"));
    }

    PatientRecord rec;
    if (!j["patient_id"].is_string()) throw fail("patient_id must be a string");
    rec.patient_id = j["patient_id"].get<std::string>();
    if (rec.patient_id.empty()) throw fail("patient_id must not be empty");

    if (!j["phenotypes"].is_array()) throw fail("phenotypes must be an array");
    std::vector<std::string> phenos;
    for (const auto& p : j["phenotypes"]) {
      if (!p.is_string()) throw fail("phenotypes entries must be strings");
      phenos.push_back(p.get<std::string>());
    }
    rec.phenotypes = detail::dedup_keep_order(phenos);

    if (!j["mutations"].is_array()) throw fail("mutations must be an array");
    std::vector<std::string> muts;
    for (const auto& m : j["mutations"]) {
      if (!m.is_object() || !m.contains("gene") || !m.contains("class") ||
          !m["gene"].is_string() || !m["class"].is_string()) {
        throw fail("mutations entries must be {gene, class} objects");
      }
      std::string gene = m["gene"].get<std::string>();
      std::string cls = m["class"].get<std::string>();
      if (gene.empty()) throw fail("mutation gene must not be empty");
      if (cls != "PATH" && cls != "VUS") {
        throw fail(str_cat("unknown mutation class '", cls,
                           "' (expected PATH or VUS)"));
      }
      muts.push_back(gene + "-" + cls);
    }
    rec.mutations = detail::dedup_keep_order(muts);

    if (!j["gender"].is_string()) throw fail("gender must be a string");
    std::string g = j["gender"].get<std::string>();
    if (g == "male") rec.gender = Gender::male;
    else if (g == "female") rec.gender = Gender::female;
    else throw fail(str_cat("unknown gender '", g, "'"));

    if (!j["label"].is_string()) throw fail("label must be a string");
    std::string lbl = j["label"].get<std::string>();
    auto label = cancer_from_string(lbl);
    if (!label) throw fail(str_cat("unknown label '", lbl, "'"));
    rec.label = *label;

    auto [it, inserted] = seen_ids.emplace(rec.patient_id, lineno);
    if (!inserted) {
      throw fail(str_cat("duplicate patient_id '", rec.patient_id,
                         "' (first seen at line ", it->second, ")"));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline void save_cohort(const std::vector<PatientRecord>& records,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(str_cat("cannot write cohort file: ", path));
  for (const auto& rec : records) {
    nlohmann::json j;
    j["patient_id"] = rec.patient_id;
    j["phenotypes"] = rec.phenotypes;
    auto muts = nlohmann::json::array();
    for (const auto& m : rec.mutations) {
      auto dash = m.rfind('-');
      muts.push_back({{"gene", m.substr(0, dash)}, {"class", m.substr(dash + 1)}});
    }
    j["mutations"] = muts;
    j["gender"] = rec.gender == Gender::male ? "male" : "female";
    j["label"] = to_string(rec.label);
    out << j.dump() << "\n";
  }
}

// The eight general phenotypic terms dropped before frequency filtering.
inline std::vector<std::string> default_stoplist() {
  return {"cyst",
          "pain",
          "carcinoma",
          "neoplasm",
          "symptoms",
          "disease",
          "minor (disease)",
          "sarcoma - cateogry (morphologic abnormality)"};
}

// Removes stoplisted phenotype tokens (case-insensitive exact match, no
// stemming). Records left with zero phenotypes are retained.
inline std::vector<PatientRecord> apply_stoplist(
    const std::vector<PatientRecord>& records,
    const std::vector<std::string>& stoplist) {
  std::unordered_set<std::string> stop;
  for (const auto& s : stoplist) stop.insert(to_lower(s));
  std::vector<PatientRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    PatientRecord r = rec;
    r.phenotypes.clear();
    for (const auto& p : rec.phenotypes) {
      if (!stop.count(to_lower(p))) r.phenotypes.push_back(p);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Dense token <-> id mapping partitioned into contiguous kind blocks:
// phenotype ids first, then genetic, then the single demographic feature.
class FeatureVocabulary {
 public:
  struct Entry {
    std::string token;
    FeatureKind kind;
    int id;
    int count;  // number of distinct patients carrying the token
  };

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<int> find(FeatureKind kind, const std::string& token) const {
    const auto& index =
        kind == FeatureKind::phenotype ? pheno_index_ : gene_index_;
    if (kind == FeatureKind::demographic) {
      return token == "gender" ? std::optional<int>(gender_id_) : std::nullopt;
    }
    auto it = index.find(token);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::size_t count_of_kind(FeatureKind kind) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.kind == kind ? 1 : 0;
    return n;
  }

  int gender_id() const { return gender_id_; }

  static FeatureVocabulary from_entries(std::vector<Entry> entries) {
    FeatureVocabulary v;
    v.entries_ = std::move(entries);
    for (const auto& e : v.entries_) {
      if (e.kind == FeatureKind::phenotype) v.pheno_index_[e.token] = e.id;
      else if (e.kind == FeatureKind::genetic) v.gene_index_[e.token] = e.id;
      else v.gender_id_ = e.id;
    }
    return v;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError(str_cat("cannot write vocabulary: ", path));
    out << "token,kind,id,count\n";
    for (const auto& e : entries_) {
      out << csv_field(e.token) << ',' << to_string(e.kind) << ',' << e.id
          << ',' << e.count << '\n';
    }
  }

  static FeatureVocabulary read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(str_cat("cannot open vocabulary: ", path));
    std::string line;
    std::getline(in, line);  // header
    std::vector<Entry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      Entry e;
      std::string kind_s, id_s, count_s;
      // fields are token,kind,id,count; token may be quoted
      std::size_t pos = 0;
      auto take_field = [&]() -> std::string {
        std::string field;
        if (pos < line.size() && line[pos] == '"') {
          ++pos;
          while (pos < line.size()) {
            if (line[pos] == '"' && pos + 1 < line.size() &&
                line[pos + 1] == '"') {
              field += '"';
              pos += 2;
            } else if (line[pos] == '"') {
              ++pos;
              break;
            } else {
              field += line[pos++];
            }
          }
          if (pos < line.size() && line[pos] == ',') ++pos;
        } else {
          auto comma = line.find(',', pos);
          if (comma == std::string::npos) {
            field = line.substr(pos);
            pos = line.size();
          } else {
            field = line.substr(pos, comma - pos);
            pos = comma + 1;
          }
        }
        return field;
      };
      e.token = take_field();
      kind_s = take_field();
      id_s = take_field();
      count_s = take_field();
      auto kind = kind_from_string(kind_s);
      if (!kind) {
        throw DataError(
            str_cat(path, ": line ", lineno, ": unknown kind '", kind_s, "'"));
      }
      e.kind = *kind;
      try {
        e.id = std::stoi(id_s);
        e.count = std::stoi(count_s);
      } catch (const std::exception&) {
        throw DataError(str_cat(path, ": line ", lineno, ": bad id/count"));
      }
      entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries));
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> pheno_index_;
  std::unordered_map<std::string, int> gene_index_;
  int gender_id_ = -1;
};

// Frequency filtering. A phenotype survives when its distinct-patient count
// is >= pheno_min; a genetic token survives when its count is strictly
// > gene_min. The single "gender" demographic feature is always appended.
inline FeatureVocabulary frequency_filter(
    const std::vector<PatientRecord>& records, int pheno_min = 20,
    int gene_min = 10) {
  if (pheno_min < 0 || gene_min < 0) {
    throw std::invalid_argument("frequency thresholds must be >= 0");
  }
  std::map<std::string, int> pheno_counts, gene_counts;  // ordered for dense ids
  for (const auto& rec : records) {
    for (const auto& p : rec.phenotypes) ++pheno_counts[p];
    for (const auto& m : rec.mutations) ++gene_counts[m];
  }
  std::vector<FeatureVocabulary::Entry> entries;
  int id = 0;
  for (const auto& [token, count] : pheno_counts) {
    if (count >= pheno_min) {
      entries.push_back({token, FeatureKind::phenotype, id++, count});
    }
  }
  for (const auto& [token, count] : gene_counts) {
    if (count > gene_min) {
      entries.push_back({token, FeatureKind::genetic, id++, count});
    }
  }
  if (entries.empty()) {
    throw DataError(
        "no features survive the frequency thresholds; lower --pheno-min / "
        "--gene-min");
  }
  entries.push_back({"gender", FeatureKind::demographic, id++,
                     static_cast<int>(records.size())});
  return FeatureVocabulary::from_entries(std::move(entries));
}

// M x N multi-hot patient-feature matrix with per-row labels and per-column
// feature kinds.
struct LabeledMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;  // row-major, each 0.0 or 1.0
  std::vector<CancerType> row_labels;
  std::vector<std::string> row_ids;
  std::vector<FeatureKind> col_kinds;
  std::vector<std::string> col_tokens;

  double at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {cells.data() + r * cols, cols};
  }
};

struct MatrixBuild {
  LabeledMatrix matrix;
  std::vector<std::string> dropped_ids;  // patients with no retained features
};

// Multi-hot encoding over the vocabulary. Gender encodes male=1, female=0.
// Patients with no retained phenotype or genetic feature are dropped.
inline MatrixBuild build_matrix(const std::vector<PatientRecord>& records,
                                const FeatureVocabulary& vocab) {
  MatrixBuild out;
  LabeledMatrix& m = out.matrix;
  m.cols = vocab.size();
  m.col_kinds.reserve(m.cols);
  m.col_tokens.reserve(m.cols);
  for (const auto& e : vocab.entries()) {
    m.col_kinds.push_back(e.kind);
    m.col_tokens.push_back(e.token);
  }
  for (const auto& rec : records) {
    std::vector<int> cols;
    for (const auto& p : rec.phenotypes) {
      if (auto id = vocab.find(FeatureKind::phenotype, p)) cols.push_back(*id);
    }
    for (const auto& g : rec.mutations) {
      if (auto id = vocab.find(FeatureKind::genetic, g)) cols.push_back(*id);
    }
    if (cols.empty()) {
      out.dropped_ids.push_back(rec.patient_id);
      continue;
    }
    std::vector<double> row(m.cols, 0.0);
    for (int c : cols) row[static_cast<std::size_t>(c)] = 1.0;
    if (rec.gender == Gender::male) {
      row[static_cast<std::size_t>(vocab.gender_id())] = 1.0;
    }
    m.cells.insert(m.cells.end(), row.begin(), row.end());
    m.row_labels.push_back(rec.label);
    m.row_ids.push_back(rec.patient_id);
    ++m.rows;
  }
  return out;
}

// Restricts a matrix to the columns whose kind satisfies the predicate.
template <typename KindPredicate>
LabeledMatrix select_columns(const LabeledMatrix& m, KindPredicate keep) {
  LabeledMatrix out;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < m.cols; ++c) {
    if (keep(m.col_kinds[c])) cols.push_back(c);
  }
  out.rows = m.rows;
  out.cols = cols.size();
  out.row_labels = m.row_labels;
  out.row_ids = m.row_ids;
  for (std::size_t c : cols) {
    out.col_kinds.push_back(m.col_kinds[c]);
    out.col_tokens.push_back(m.col_tokens[c]);
  }
  out.cells.reserve(out.rows * out.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c : cols) out.cells.push_back(m.at(r, c));
  }
  return out;
}

inline LabeledMatrix select_rows(const LabeledMatrix& m,
                                 const std::vector<std::size_t>& rows) {
  LabeledMatrix out;
  out.rows = rows.size();
  out.cols = m.cols;
  out.col_kinds = m.col_kinds;
  out.col_tokens = m.col_tokens;
  out.cells.reserve(out.rows * out.cols);
  for (std::size_t r : rows) {
    auto row = m.row(r);
    out.cells.insert(out.cells.end(), row.begin(), row.end());
    out.row_labels.push_back(m.row_labels[r]);
    out.row_ids.push_back(m.row_ids[r]);
  }
  return out;
}

}  // namespace stratkit
