#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skybatch/workload.hpp"

namespace skybatch::workload {

// Trace file: `#`-prefixed header lines (config echo; `# layout <hex>` pins
// the bucket layout the trace was generated against), then per query one
// `query_id,arrival_ms,n_objects` line followed by n `x,y,z,radius_rad` rows.
struct TraceFile {
    std::vector<Query> queries;
    std::optional<std::uint64_t> layout_hash;
    std::vector<std::string> header; // without the leading "# "
};

void write_trace(const std::filesystem::path& path, const std::vector<Query>& queries,
                 const std::vector<std::string>& header_lines,
                 std::optional<std::uint64_t> layout_hash);

TraceFile read_trace(const std::filesystem::path& path);

} // namespace skybatch::workload
