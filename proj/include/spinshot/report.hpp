#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "spinshot/analysis.hpp"
#include "spinshot/simulate.hpp"

namespace spinshot::report {

/// Raised when a requested analysis lacks its inputs (missing windows,
/// missing CRC checks, ...). The CLI maps it to its own exit code.
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnalyzeOptions {
    std::optional<std::uint32_t> threshold;      // readout threshold override
    std::optional<std::uint32_t> crc_threshold;  // CRC pass threshold override
    std::optional<analysis::CrcSelect> select;   // default: both when CRCs exist
};

struct AnalyzeResult {
    nlohmann::json report;
    std::map<std::string, std::string> tables;  // file name -> CSV content
};

AnalyzeResult analyze_dataset(const Dataset& dataset, const AnalyzeOptions& options = {});

/// Write report.json and the CSV tables into out_dir.
void write_analysis(const AnalyzeResult& result, const std::string& out_dir);

}  // namespace spinshot::report
