#include "refcat/weblinks.h"

#include "refcat/normalize.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <random>
#include <thread>

using nlohmann::json;

namespace refcat::weblinks {

namespace {

bool is_url_char(char c) {
    // RFC 3986 unreserved + reserved + '%'; anything else ends the URL.
    if (std::isalnum(static_cast<unsigned char>(c))) return true;
    return std::string_view("-._~:/?#[]@!$&'()*+,;=%").find(c) != std::string_view::npos;
}

struct UrlParts {
    std::string scheme, host, path; // path includes query
};

std::optional<UrlParts> parse_url(std::string_view url) {
    UrlParts p;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return std::nullopt;
    p.scheme = ascii_lower(url.substr(0, scheme_end));
    if (p.scheme != "http" && p.scheme != "https") return std::nullopt;
    auto rest = url.substr(scheme_end + 3);
    auto slash = rest.find_first_of("/?");
    std::string_view host = slash == std::string_view::npos ? rest : rest.substr(0, slash);
    if (host.empty()) return std::nullopt;
    p.host = ascii_lower(host);
    p.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (p.path[0] == '?') p.path = "/" + p.path;
    return p;
}

bool is_doi_resolver(const UrlParts& p) {
    return p.host == "doi.org" || p.host == "dx.doi.org" || p.host == "www.doi.org";
}

} // namespace

std::optional<std::string> clean_url(std::string_view raw) {
    std::string s(trim(raw));
    if (s.empty()) return std::nullopt;

    // Doubled scheme from OCR/metadata concatenation: http://http://x
    for (bool changed = true; changed;) {
        changed = false;
        for (std::string_view dbl : {"http://http://", "http://https://", "https://http://",
                                     "https://https://"}) {
            if (s.size() > dbl.size() && ascii_lower(s.substr(0, dbl.size())) == dbl) {
                auto inner = dbl.substr(dbl.find("//") + 2);
                s = s.substr(dbl.size() - inner.size());
                changed = true;
            }
        }
    }
    if (ascii_lower(s.substr(0, std::min<size_t>(4, s.size()))) == "www.") s = "http://" + s;

    // Trailing punctuation; closing brackets only when unbalanced.
    while (!s.empty()) {
        char c = s.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
            c == '\'') {
            s.pop_back();
            continue;
        }
        if (c == ')' &&
            std::count(s.begin(), s.end(), '(') < std::count(s.begin(), s.end(), ')')) {
            s.pop_back();
            continue;
        }
        if (c == ']' &&
            std::count(s.begin(), s.end(), '[') < std::count(s.begin(), s.end(), ']')) {
            s.pop_back();
            continue;
        }
        break;
    }

    auto parts = parse_url(s);
    if (!parts) return std::nullopt;
    if (is_doi_resolver(*parts)) return std::nullopt;

    // Lowercase scheme+host only; path/query stay as written. A bare host
    // keeps its "no trailing slash" spelling.
    bool bare_host = s.substr(s.find("://") + 3).find_first_of("/?") == std::string::npos;
    return parts->scheme + "://" + parts->host + (bare_host ? "" : parts->path);
}

std::vector<std::string> extract_urls_from_text(std::string_view text) {
    std::vector<std::string> out;
    size_t pos = 0;
    std::string lower = ascii_lower(text);
    while (pos < lower.size()) {
        auto hit = lower.find("http", pos);
        if (hit == std::string_view::npos) break;
        bool https = lower.compare(hit, 8, "https://") == 0;
        bool http = lower.compare(hit, 7, "http://") == 0;
        if (!https && !http) {
            pos = hit + 4;
            continue;
        }
        size_t end = hit;
        while (end < text.size() && is_url_char(text[end])) ++end;
        if (auto cleaned = clean_url(text.substr(hit, end - hit))) out.push_back(*cleaned);
        pos = end;
    }
    return out;
}

std::vector<std::string> extract_clean_urls(const RawReference& r) {
    std::vector<std::string> out;
    auto add = [&](const std::string& u) {
        if (std::find(out.begin(), out.end(), u) == out.end()) out.push_back(u);
    };
    if (r.biblio.url) {
        if (auto cleaned = clean_url(*r.biblio.url)) add(*cleaned);
    }
    if (r.biblio.unstructured)
        for (auto& u : extract_urls_from_text(*r.biblio.unstructured)) add(u);
    return out;
}

// --- transports -----------------------------------------------------------

namespace {

class NetworkTransport final : public Transport {
public:
    explicit NetworkTransport(int timeout_seconds) : timeout_(timeout_seconds) {}

    std::optional<HttpResponse> get(const std::string& url) override { return fetch(url, false); }
    std::optional<HttpResponse> head(const std::string& url) override { return fetch(url, true); }

private:
    std::optional<HttpResponse> fetch(const std::string& url, bool head) {
        auto parts = parse_url(url);
        if (!parts) return std::nullopt;
        httplib::Client cli(parts->scheme + "://" + parts->host);
        cli.set_connection_timeout(timeout_, 0);
        cli.set_read_timeout(timeout_, 0);
        cli.set_follow_location(false);
        auto res = head ? cli.Head(parts->path) : cli.Get(parts->path);
        if (!res) return std::nullopt;
        HttpResponse out;
        out.status = res->status;
        out.location = res->get_header_value("Location");
        out.body = res->body;
        return out;
    }

    int timeout_;
};

std::string url_decode(std::string_view s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            auto hex = [](char c) -> int {
                if (c >= '0' && c <= '9') return c - '0';
                if (c >= 'a' && c <= 'f') return c - 'a' + 10;
                if (c >= 'A' && c <= 'F') return c - 'A' + 10;
                return -1;
            };
            int hi = hex(s[i + 1]), lo = hex(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>(hi * 16 + lo);
                i += 2;
                continue;
            }
        }
        out += s[i] == '+' ? ' ' : s[i];
    }
    return out;
}

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xf];
        }
    }
    return out;
}

} // namespace

std::unique_ptr<Transport> make_network_transport(int timeout_seconds) {
    return std::make_unique<NetworkTransport>(timeout_seconds);
}

struct FixtureTransport::Impl {
    json cdx;
    json live;
    std::string api_base;

    std::optional<HttpResponse> answer(const std::string& url, bool head) {
        if (url.rfind(api_base, 0) == 0) {
            auto qpos = url.find("url=");
            if (qpos == std::string::npos) return std::nullopt;
            auto end = url.find('&', qpos);
            std::string target = url_decode(
                url.substr(qpos + 4, end == std::string::npos ? std::string::npos
                                                              : end - (qpos + 4)));
            auto it = cdx.find(target);
            if (it == cdx.end()) return std::nullopt; // unreachable API
            HttpResponse res;
            res.status = it->value("api_status", 200);
            if (res.status == 200) {
                json body = json::array();
                auto rows = it->value("rows", json::array());
                if (!rows.empty()) {
                    body.push_back({"urlkey", "timestamp", "statuscode"});
                    for (const auto& row : rows) body.push_back(row);
                }
                res.body = body.dump();
            }
            return res;
        }
        auto it = live.find(url);
        if (it == live.end()) return std::nullopt; // refused connection
        HttpResponse res;
        res.status = it->value("status", 200);
        res.location = it->value("location", std::string{});
        if (!head) res.body = it->value("body", std::string{});
        // Entries may insist on GET (HEAD not allowed).
        if (head && it->value("head_not_allowed", false)) res.status = 405;
        return res;
    }
};

FixtureTransport::FixtureTransport(const std::filesystem::path& fixture_json,
                                   std::string cdx_api_base)
    : impl_(std::make_shared<Impl>()) {
    auto src = open_line_source(fixture_json);
    std::string all, line;
    while (src->next(line)) all += line + "\n";
    json j = json::parse(all);
    impl_->cdx = j.value("cdx", json::object());
    impl_->live = j.value("live", json::object());
    impl_->api_base = std::move(cdx_api_base);
}

std::optional<HttpResponse> FixtureTransport::get(const std::string& url) {
    return impl_->answer(url, false);
}

std::optional<HttpResponse> FixtureTransport::head(const std::string& url) {
    return impl_->answer(url, true);
}

// --- CDX client ------------------------------------------------------------

CdxClient::CdxClient(Transport& transport, std::string api_base, int attempts, int backoff_ms)
    : transport_(transport), api_base_(std::move(api_base)), attempts_(attempts),
      backoff_ms_(backoff_ms) {}

std::string CdxClient::request_url(const std::string& url) const {
    return api_base_ + "?url=" + url_encode(url) + "&output=json&limit=1&sort=reverse";
}

CdxResult CdxClient::lookup(const std::string& url) {
    std::string request = request_url(url);
    for (int attempt = 0; attempt < attempts_; ++attempt) {
        if (attempt > 0 && backoff_ms_ > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << (attempt - 1)));
        auto res = transport_.get(request);
        if (!res || res->status >= 500) continue; // timeout/5xx: retry
        if (res->status != 200) return {CdxOutcome::LookupFailed, 0};
        json rows = json::parse(res->body, nullptr, false);
        if (rows.is_discarded() || !rows.is_array()) return {CdxOutcome::LookupFailed, 0};
        size_t first = 0;
        if (!rows.empty() && rows[0].is_array() && !rows[0].empty() && rows[0][0] == "urlkey")
            first = 1; // header row
        if (rows.size() <= first) return {CdxOutcome::NoCapture, 0};
        const auto& row = rows[first];
        if (!row.is_array() || row.size() < 3) return {CdxOutcome::LookupFailed, 0};
        std::string code = row[2].is_string() ? row[2].get<std::string>() : row[2].dump();
        int status = 0;
        try {
            status = std::stoi(code);
        } catch (...) {
            return {CdxOutcome::NoCapture, 0}; // revisit records carry "-"
        }
        if (status < 100 || status > 599) return {CdxOutcome::NoCapture, 0};
        return {CdxOutcome::Snapshot, status};
    }
    return {CdxOutcome::LookupFailed, 0};
}

// --- live checking ----------------------------------------------------------

LiveChecker::LiveChecker(Transport& transport, LiveCheckConfig config)
    : transport_(transport), config_(config) {}

void LiveChecker::politeness_wait(const std::string& host) {
    if (config_.rate <= 0) return;
    auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config_.rate));
    std::chrono::steady_clock::time_point wait_until;
    {
        std::lock_guard lock(mu_);
        auto now = std::chrono::steady_clock::now();
        auto it = last_hit_.find(host);
        wait_until = (it == last_hit_.end()) ? now : it->second + interval;
        if (wait_until < now) wait_until = now;
        last_hit_[host] = wait_until;
    }
    std::this_thread::sleep_until(wait_until);
}

namespace {

std::string resolve_location(const UrlParts& base, const std::string& location) {
    if (location.rfind("http://", 0) == 0 || location.rfind("https://", 0) == 0)
        return location;
    if (!location.empty() && location[0] == '/')
        return base.scheme + "://" + base.host + location;
    auto dir = base.path.substr(0, base.path.find_last_of('/') + 1);
    return base.scheme + "://" + base.host + dir + location;
}

} // namespace

int LiveChecker::check(const std::string& url) {
    std::string current = url;
    for (int hop = 0; hop <= config_.max_redirects; ++hop) {
        auto parts = parse_url(current);
        if (!parts) return 0;
        politeness_wait(parts->host);
        auto res = transport_.head(current);
        if (res && (res->status == 405 || res->status == 501)) res = transport_.get(current);
        if (!res) res = transport_.get(current);
        if (!res) return 0;
        if (res->status >= 300 && res->status < 400 && !res->location.empty() &&
            hop < config_.max_redirects) {
            current = resolve_location(*parts, res->location);
            continue;
        }
        return res->status;
    }
    return 0;
}

std::vector<int> LiveChecker::check_all(const std::vector<std::string>& urls) {
    std::vector<int> results(urls.size(), 0);
    int workers = std::max(1, config_.workers);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= urls.size()) break;
            results[i] = check(urls[i]);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

// --- audits and coverage ----------------------------------------------------

std::string audit_to_json_line(const WeblinkAudit& a) {
    json j = json::object();
    j["url"] = a.url;
    j["source_ident"] = a.source_ident;
    if (a.archive_status) j["archive_status"] = *a.archive_status;
    if (a.lookup_failed) j["lookup_failed"] = true;
    if (a.live_status) j["live_status"] = *a.live_status;
    if (!a.checked_at.empty()) j["checked_at"] = a.checked_at;
    return j.dump();
}

WeblinkAudit audit_from_json_line(std::string_view line) {
    json j = json::parse(line);
    WeblinkAudit a;
    a.url = j.at("url").get<std::string>();
    a.source_ident = j.value("source_ident", std::string{});
    if (auto it = j.find("archive_status"); it != j.end()) a.archive_status = it->get<int>();
    a.lookup_failed = j.value("lookup_failed", false);
    if (auto it = j.find("live_status"); it != j.end()) a.live_status = it->get<int>();
    a.checked_at = j.value("checked_at", std::string{});
    return a;
}

double CoverageReport::preserved_strict() const {
    uint64_t known = total - lookup_failed;
    return known == 0 ? 0.0 : static_cast<double>(archived_200) / static_cast<double>(known);
}

double CoverageReport::preserved_upper() const {
    uint64_t known = total - lookup_failed;
    return known == 0 ? 0.0 : static_cast<double>(archived_upper) / static_cast<double>(known);
}

double CoverageReport::live_ok() const {
    return live_checked == 0 ? 0.0
                             : static_cast<double>(live_200) / static_cast<double>(live_checked);
}

CoverageReport coverage_report(LineSource& audits) {
    CoverageReport r;
    std::string line;
    while (audits.next(line)) {
        if (line.empty()) continue;
        WeblinkAudit a = audit_from_json_line(line);
        ++r.total;
        if (a.lookup_failed) {
            ++r.lookup_failed;
        } else if (a.archive_status) {
            int s = *a.archive_status;
            if (s == 200) ++r.archived_200;
            if (s == 200 || (s >= 300 && s <= 399) || (s >= 500 && s <= 599)) ++r.archived_upper;
        }
        if (a.live_status) {
            ++r.live_checked;
            if (*a.live_status == 200) ++r.live_200;
        }
    }
    return r;
}

void write_coverage_tsv(const CoverageReport& r, LineSink& out) {
    auto fmt = [](double v) {
        char buf[32];
        snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    out.write("metric\tvalue");
    out.write("links_total\t" + std::to_string(r.total));
    out.write("lookup_failed\t" + std::to_string(r.lookup_failed));
    out.write("archived_200\t" + std::to_string(r.archived_200));
    out.write("archived_upper\t" + std::to_string(r.archived_upper));
    out.write("preserved_strict\t" + fmt(r.preserved_strict()));
    out.write("preserved_upper\t" + fmt(r.preserved_upper()));
    out.write("live_checked\t" + std::to_string(r.live_checked));
    out.write("live_200\t" + std::to_string(r.live_200));
    out.write("live_ok\t" + fmt(r.live_ok()));
}

AuditStats audit_references(LineSource& refs, CdxClient& cdx, Transport& live_transport,
                            LineSink& audits_out, const AuditConfig& config) {
    AuditStats stats;

    struct Entry {
        std::string url, source_ident;
    };
    std::vector<Entry> entries;
    std::map<std::string, CdxResult> by_url;
    std::string line;
    while (refs.next(line)) {
        if (line.empty()) continue;
        RawReference r = raw_reference_from_json_line(line);
        ++stats.refs;
        for (auto& url : extract_clean_urls(r)) {
            entries.push_back({url, r.source_ident});
            ++stats.urls;
            by_url.emplace(url, CdxResult{});
        }
    }
    stats.unique_urls = by_url.size();

    for (auto& [url, result] : by_url) {
        result = cdx.lookup(url);
        if (result.outcome == CdxOutcome::LookupFailed) ++stats.lookup_failed;
    }

    // Live-check sample: uniform over links with a 200 archival copy.
    std::vector<size_t> eligible;
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& r = by_url[entries[i].url];
        if (r.outcome == CdxOutcome::Snapshot && r.status == 200) eligible.push_back(i);
    }
    std::map<size_t, int> live_results;
    if (config.live_sample > 0 && !eligible.empty()) {
        std::mt19937_64 rng(config.sample_seed);
        std::vector<size_t> picked = eligible;
        // Partial Fisher-Yates with modulo draws (deterministic across
        // platforms, unlike std distributions).
        size_t n = std::min<size_t>(static_cast<size_t>(config.live_sample), picked.size());
        for (size_t i = 0; i < n; ++i) {
            size_t j = i + static_cast<size_t>(rng() % (picked.size() - i));
            std::swap(picked[i], picked[j]);
        }
        picked.resize(n);
        std::sort(picked.begin(), picked.end());
        std::vector<std::string> urls;
        urls.reserve(picked.size());
        for (size_t idx : picked) urls.push_back(entries[idx].url);
        LiveChecker checker(live_transport, config.live);
        auto statuses = checker.check_all(urls);
        for (size_t k = 0; k < picked.size(); ++k) live_results[picked[k]] = statuses[k];
    }

    std::string checked_at = config.now_fn ? config.now_fn() : [] {
        std::time_t t = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return std::string(buf);
    }();

    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& cdx_result = by_url[entries[i].url];
        WeblinkAudit audit;
        audit.url = entries[i].url;
        audit.source_ident = entries[i].source_ident;
        switch (cdx_result.outcome) {
        case CdxOutcome::Snapshot: audit.archive_status = cdx_result.status; break;
        case CdxOutcome::NoCapture: break;
        case CdxOutcome::LookupFailed: audit.lookup_failed = true; break;
        }
        if (auto it = live_results.find(i); it != live_results.end()) audit.live_status = it->second;
        audit.checked_at = checked_at;
        audits_out.write(audit_to_json_line(audit));
    }
    return stats;
}

} // namespace refcat::weblinks
