#include "skybatch/trace_io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skybatch/errors.hpp"

namespace skybatch::workload {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("trace: bad ") + what + " value '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError(std::string("trace: bad ") + what + " value '" + s + "'");
    }
    return v;
}

} // namespace

void write_trace(const std::filesystem::path& path, const std::vector<Query>& queries,
                 const std::vector<std::string>& header_lines,
                 std::optional<std::uint64_t> layout_hash) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw StorageError("cannot open trace for write: " + path.string());

    for (const auto& line : header_lines) {
        f << "# " << line << "\n";
    }
    if (layout_hash) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016" PRIx64, *layout_hash);
        f << "# layout " << buf << "\n";
    }

    char line[160];
    for (const auto& q : queries) {
        std::snprintf(line, sizeof(line), "%" PRIu64 ",%.3f,%zu\n", q.query_id,
                      to_ms(q.arrival), q.objects.size());
        f << line;
        for (const auto& o : q.objects) {
            std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", o.pos.x, o.pos.y,
                          o.pos.z, o.radius);
            f << line;
        }
    }
    if (!f) throw StorageError("trace write failed: " + path.string());
}

TraceFile read_trace(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw StorageError("cannot open trace: " + path.string());

    TraceFile out;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::pair<Query, std::size_t>> open_query; // query + objects left

    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(line.find_first_not_of("# "));
            if (body.rfind("layout ", 0) == 0) {
                out.layout_hash = std::stoull(body.substr(7), nullptr, 16);
            }
            out.header.push_back(body);
            continue;
        }

        auto fields = split_csv(line);
        if (!open_query) {
            if (fields.size() != 3) {
                throw ConfigError("trace: expected query header at line " +
                                  std::to_string(line_no));
            }
            Query q;
            q.query_id = parse_u64(fields[0], "query_id");
            q.arrival = from_ms(parse_double(fields[1], "arrival_ms"));
            if (q.arrival < 0) throw ConfigError("trace: negative arrival time");
            std::size_t n = parse_u64(fields[2], "n_objects");
            if (n == 0) throw ConfigError("trace: query with zero objects");
            open_query = {std::move(q), n};
        } else {
            if (fields.size() != 4) {
                throw ConfigError("trace: expected object row at line " +
                                  std::to_string(line_no));
            }
            htm::UnitVec pos{parse_double(fields[0], "x"), parse_double(fields[1], "y"),
                             parse_double(fields[2], "z")};
            double radius = parse_double(fields[3], "radius_rad");
            try {
                open_query->first.objects.push_back(make_match_object(pos, radius));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("trace: " + std::string(e.what()) + " at line " +
                                  std::to_string(line_no));
            }
            if (--open_query->second == 0) {
                out.queries.push_back(std::move(open_query->first));
                open_query.reset();
            }
        }
    }
    if (open_query) {
        throw ConfigError("trace: truncated object rows for query " +
                          std::to_string(open_query->first.query_id));
    }
    return out;
}

} // namespace skybatch::workload
