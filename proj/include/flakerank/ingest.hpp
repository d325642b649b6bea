#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flakerank/types.hpp"

namespace flakerank {

// Exact, ordered table headers. The `logs` column is optional on input;
// on output it is present iff the dataset carries inline logs.
extern const std::vector<std::string> kJobsHeader;        // without logs
extern const std::vector<std::string> kJobsHeaderLogs;    // with logs
extern const std::vector<std::string> kLabeledExtra;      // flaky, category
extern const std::vector<std::string> kRfmHeader;         // category,recency,frequency,monetary
extern const std::vector<std::string> kEvolutionHeader;   // category,period,count
extern const std::vector<std::string> kRankedHeader;

/// Parses a jobs CSV. When the file has no `logs` column, `logs_dir` must
/// point at a directory containing `<id>.log` per job; when both sources
/// are present the sidecar file wins. Log text is UTF-8-sanitized.
Dataset parse_jobs(const std::string& path, const std::optional<std::string>& logs_dir = {});

/// Parses a labeled CSV (jobs columns + flaky + category). The `logs`
/// column may be absent; no sidecar is consulted.
LabeledDataset parse_labeled(const std::string& path);

std::vector<CategoryRfm> parse_rfm(const std::string& path);
std::vector<RankedCategory> parse_ranked(const std::string& path);

void write_jobs(const Dataset& ds, std::ostream& out);
void write_labeled(const LabeledDataset& ds, std::ostream& out);
void write_rfm(const std::vector<CategoryRfm>& rows, std::ostream& out);
void write_evolution(const std::vector<EvolutionRow>& rows, std::ostream& out);
void write_ranked(const std::vector<RankedCategory>& rows, std::ostream& out);

}  // namespace flakerank
