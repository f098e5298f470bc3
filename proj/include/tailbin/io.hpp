#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "tailbin/baselines.hpp"
#include "tailbin/cs_model.hpp"
#include "tailbin/evaluation.hpp"
#include "tailbin/experiments.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

inline constexpr const char* kSpecVersion = "1.0";

// Malformed input files or configuration (CLI exit 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable paths (CLI exit 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over path.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // 1-based source line of each row
};

CsvTable parse_csv(const std::string& text);

struct CsvLoad {
  CrossSection data;
  std::size_t excluded = 0;  // rows with a missing y or x
};

// Header y,x,z1..zK; with no z columns a constant column is used.
CsvLoad cross_section_from_csv(const CsvTable& table);

struct PanelLoad {
  PanelData panel;
  std::size_t excluded = 0;
  long first_t = 0;  // period label of index 0
};

// Header unit,t,y,x,z1..zK. Unit z that varies over t becomes z_t.
PanelLoad panel_from_csv(const CsvTable& table);

ForecastSet forecasts_from_csv(const CsvTable& table);

// Fit artifacts.
nlohmann::json to_json(const CsFit& fit);
nlohmann::json to_json(const PanelFit& fit, const std::string& mode);
nlohmann::json to_json(const FeFit& fit);
nlohmann::json to_json(const DynFit& fit);
nlohmann::json to_json(const LogitFit& fit);

CsFit cs_fit_from_json(const nlohmann::json& j);
PanelFit panel_fit_from_json(const nlohmann::json& j);
FeFit fe_fit_from_json(const nlohmann::json& j);
DynFit dyn_fit_from_json(const nlohmann::json& j);
LogitFit logit_fit_from_json(const nlohmann::json& j);

// Experiment configuration; `kind` is the experiment named on the command line.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentKind kind);
nlohmann::json to_json(const ExperimentConfig& config);

std::string format_number(double v);
std::string summary_csv(const ExperimentResult& result);
std::string lps_csv(const ExperimentResult& result);
std::string lps_reps_csv(const ExperimentResult& result);

}  // namespace tailbin
