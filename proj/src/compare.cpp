#include "refcat/compare.h"

#include "refcat/normalize.h"
#include "refcat/tsv.h"

#include <algorithm>
#include <stdexcept>

namespace refcat::compare {

EdgeSetReport EdgeSetReport::from_sizes(uint64_t size_c, uint64_t size_r, uint64_t overlap) {
    if (overlap > size_c || overlap > size_r)
        throw std::invalid_argument("overlap exceeds a set size");
    EdgeSetReport r;
    r.size_c = size_c;
    r.size_r = size_r;
    r.overlap = overlap;
    r.only_c = size_c - overlap;
    r.only_r = size_r - overlap;
    return r;
}

bool EdgeSetReport::arithmetic_ok() const {
    return size_c == overlap + only_c && size_r == overlap + only_r;
}

std::string encode_edge(std::string_view citing, std::string_view cited) {
    std::string key = tsv::escape(citing);
    key += '\x1f';
    key += tsv::escape(cited);
    return key;
}

bool decode_edge(std::string_view key, std::string& citing, std::string& cited) {
    auto sep = key.find('\x1f');
    if (sep == std::string_view::npos) return false;
    citing = tsv::unescape(key.substr(0, sep));
    cited = tsv::unescape(key.substr(sep + 1));
    return true;
}

std::vector<std::string> split_csv(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
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
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

EdgePrepStats prepare_edge_set(const std::filesystem::path& csv, const CsvSpec& spec,
                               const std::filesystem::path& sorted_out,
                               const mr::SortSpec& sort_spec) {
    EdgePrepStats stats;
    auto in = open_line_source(csv);

    std::string header;
    if (!in->next(header)) {
        open_line_sink(sorted_out)->close();
        return stats;
    }
    auto columns = split_csv(header, spec.delimiter);
    auto find_col = [&](const std::string& name) -> size_t {
        auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end())
            throw std::runtime_error("column '" + name + "' not found in " + csv.string());
        return static_cast<size_t>(it - columns.begin());
    };
    size_t citing_idx = find_col(spec.citing_column);
    size_t cited_idx = find_col(spec.cited_column);

    // Key the edges, sort, then drop adjacent duplicates.
    class EdgeKeySource final : public LineSource {
    public:
        EdgeKeySource(LineSource& in, char delim, size_t ci, size_t cj, EdgePrepStats& stats)
            : in_(in), delim_(delim), ci_(ci), cj_(cj), stats_(stats) {}
        bool next(std::string& line) override {
            std::string raw;
            while (in_.next(raw)) {
                auto fields = split_csv(raw, delim_);
                if (fields.size() <= std::max(ci_, cj_)) {
                    ++stats_.malformed;
                    continue;
                }
                auto citing = normalize_doi(fields[ci_]);
                auto cited = normalize_doi(fields[cj_]);
                if (!citing || !cited) {
                    ++stats_.malformed;
                    continue;
                }
                line = encode_edge(*citing, *cited);
                return true;
            }
            return false;
        }

    private:
        LineSource& in_;
        char delim_;
        size_t ci_, cj_;
        EdgePrepStats& stats_;
    };

    EdgeKeySource keyed(*in, spec.delimiter, citing_idx, cited_idx, stats);

    class DedupSink final : public LineSink {
    public:
        DedupSink(LineSink& out, EdgePrepStats& stats) : out_(out), stats_(stats) {}
        void write(std::string_view line) override {
            if (has_last_ && line == last_) {
                ++stats_.duplicates;
                return;
            }
            last_ = std::string(line);
            has_last_ = true;
            out_.write(line);
            ++stats_.edges;
        }

    private:
        LineSink& out_;
        EdgePrepStats& stats_;
        std::string last_;
        bool has_last_ = false;
    };

    auto out = open_line_sink(sorted_out);
    DedupSink dedup(*out, stats);
    mr::external_sort(keyed, dedup, sort_spec);
    out->close();
    return stats;
}

std::string_view doi_prefix(std::string_view doi) {
    auto slash = doi.find('/');
    return slash == std::string_view::npos ? doi : doi.substr(0, slash);
}

CompareResult compare_edge_sets(const std::filesystem::path& c_csv,
                                const std::filesystem::path& r_csv, const CsvSpec& spec,
                                const mr::SortSpec& sort_spec, const std::string& prefix_family,
                                size_t top_n_prefixes) {
    CompareResult result;
    result.family.prefix = prefix_family;

    std::filesystem::create_directories(sort_spec.tmp_dir);
    auto c_sorted = sort_spec.tmp_dir / "edges-c.tsv.gz";
    auto r_sorted = sort_spec.tmp_dir / "edges-r.tsv.gz";
    mr::SortSpec c_spec = sort_spec;
    c_spec.tag = "edges-c";
    mr::SortSpec r_spec = sort_spec;
    r_spec.tag = "edges-r";
    auto c_stats = prepare_edge_set(c_csv, spec, c_sorted, c_spec);
    auto r_stats = prepare_edge_set(r_csv, spec, r_sorted, r_spec);
    result.malformed_c = c_stats.malformed;
    result.malformed_r = r_stats.malformed;
    result.duplicates_c = c_stats.duplicates;
    result.duplicates_r = r_stats.duplicates;

    std::map<std::string, uint64_t> prefix_counts;
    auto note_only_r = [&](std::string_view key) {
        ++result.report.only_r;
        std::string citing, cited;
        if (!decode_edge(key, citing, cited)) return;
        std::string p1(doi_prefix(citing)), p2(doi_prefix(cited));
        ++prefix_counts[p1];
        if (p2 != p1) ++prefix_counts[p2];
        if (!prefix_family.empty()) {
            bool c1 = p1 == prefix_family, c2 = p2 == prefix_family;
            if (c1 || c2) ++result.family.either_endpoint;
            if (c1 && c2) ++result.family.both_endpoints;
        }
    };

    // Single merge pass over both sorted, deduplicated streams.
    auto c_in = open_line_source(c_sorted);
    auto r_in = open_line_source(r_sorted);
    std::string c_line, r_line;
    bool c_ok = c_in->next(c_line), r_ok = r_in->next(r_line);
    while (c_ok || r_ok) {
        if (c_ok && r_ok) {
            int cmp = c_line.compare(r_line);
            if (cmp == 0) {
                ++result.report.overlap;
                c_ok = c_in->next(c_line);
                r_ok = r_in->next(r_line);
            } else if (cmp < 0) {
                ++result.report.only_c;
                c_ok = c_in->next(c_line);
            } else {
                note_only_r(r_line);
                r_ok = r_in->next(r_line);
            }
        } else if (c_ok) {
            ++result.report.only_c;
            c_ok = c_in->next(c_line);
        } else {
            note_only_r(r_line);
            r_ok = r_in->next(r_line);
        }
    }
    result.report.size_c = result.report.overlap + result.report.only_c;
    result.report.size_r = result.report.overlap + result.report.only_r;
    if (result.report.size_c != c_stats.edges || result.report.size_r != r_stats.edges)
        throw std::logic_error("edge set comparison lost rows");
    if (!result.report.arithmetic_ok()) throw std::logic_error("report arithmetic violated");

    std::vector<std::pair<std::string, uint64_t>> ranked(prefix_counts.begin(),
                                                         prefix_counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > top_n_prefixes) ranked.resize(top_n_prefixes);
    result.top_prefixes = std::move(ranked);

    std::filesystem::remove(c_sorted);
    std::filesystem::remove(r_sorted);
    return result;
}

void write_report(const CompareResult& result, LineSink& out) {
    const auto& r = result.report;
    out.write("set\tcount");
    out.write("C\t" + std::to_string(r.size_c));
    out.write("R\t" + std::to_string(r.size_r));
    out.write("C_and_R\t" + std::to_string(r.overlap));
    out.write("C_only\t" + std::to_string(r.only_c));
    out.write("R_only\t" + std::to_string(r.only_r));
    out.write("malformed_C\t" + std::to_string(result.malformed_c));
    out.write("malformed_R\t" + std::to_string(result.malformed_r));
    if (!result.family.prefix.empty()) {
        out.write("R_only_prefix_" + result.family.prefix +
                  "_either\t" + std::to_string(result.family.either_endpoint));
        out.write("R_only_prefix_" + result.family.prefix +
                  "_both\t" + std::to_string(result.family.both_endpoints));
    }
    for (const auto& [prefix, count] : result.top_prefixes)
        out.write("R_only_top_prefix\t" + prefix + "\t" + std::to_string(count));
}

} // namespace refcat::compare
