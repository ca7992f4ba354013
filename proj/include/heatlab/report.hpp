#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "heatlab/harness.hpp"

namespace heatlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "heatlab-report-v1";
inline constexpr const char* kGridCsvSchema = "heatlab-grid-v1";

// Every document carries "schema" and "kind"; the console summary is a
// function of the document alone, so a saved report re-summarizes exactly.

Json to_json(const CheckReport& r);
CheckReport check_report_from_json(const Json& j);
Json to_json(const SweepResult& s, const Manifold& m, const GridSpec& g);
Json to_json(const H3Scan& s);
Json to_json(const AdditivityReport& r);
Json to_json(const TransferReport& r);
Json to_json(const HarnackReport& r);

std::string summarize(const Json& doc);
std::string summary_text(const CheckReport& r);

/// One row per grid point: manifold,t,x,y,tY,rhs,margin (coordinates space separated).
void write_check_csv(std::ostream& os, const CheckReport& r);
void write_sweep_csv(std::ostream& os, const SweepResult& s, const std::string& manifold);
void write_h3_csv(std::ostream& os, const H3Scan& s);

/// Locale-independent number formatting used in CSV cells.
std::string csv_number(double v);

void write_text_file(const std::filesystem::path& path, const std::string& text);
Json read_json_file(const std::filesystem::path& path);

}  // namespace heatlab
