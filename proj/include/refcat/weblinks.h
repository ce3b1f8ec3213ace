#pragma once

#include "refcat/io.h"
#include "refcat/records.h"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace refcat::weblinks {

// Weblink preservation audit: pull URLs out of raw references, clean the
// OCR/metadata damage, ask a CDX-style archive API for the best snapshot,
// optionally live-check a sample, and report preservation fractions.

// URL extraction + cleaning. Rules: take the url field plus http(s)://
// substrings from unstructured text; strip trailing `.,;:!?)]"'` (closing
// brackets only when unbalanced inside the URL); collapse doubled schemes;
// drop DOI-resolver URLs (those are identifiers, not weblinks); lowercase
// scheme and host. Idempotent on its own output.
std::vector<std::string> extract_urls_from_text(std::string_view text);
std::optional<std::string> clean_url(std::string_view raw);
std::vector<std::string> extract_clean_urls(const RawReference& r);

struct HttpResponse {
    int status = 0;
    std::string location; // redirect target, when any
    std::string body;
};

// Minimal HTTP abstraction so archive lookups and live checks run against
// either the network or a recorded fixture. nullopt = transport-level
// failure (refused, timeout).
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::optional<HttpResponse> get(const std::string& url) = 0;
    virtual std::optional<HttpResponse> head(const std::string& url) = 0;
};

std::unique_ptr<Transport> make_network_transport(int timeout_seconds);

// Recorded request->response map on disk (JSON; see docs/FORMATS.md).
// CDX API requests are answered from the "cdx" section keyed by the looked-up
// URL; anything else from "live". Missing entries behave as unreachable.
class FixtureTransport final : public Transport {
public:
    FixtureTransport(const std::filesystem::path& fixture_json, std::string cdx_api_base);
    std::optional<HttpResponse> get(const std::string& url) override;
    std::optional<HttpResponse> head(const std::string& url) override;

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

inline constexpr const char* kDefaultCdxApi = "https://web.archive.org/cdx/search/cdx";

enum class CdxOutcome { Snapshot, NoCapture, LookupFailed };

struct CdxResult {
    CdxOutcome outcome = CdxOutcome::LookupFailed;
    int status = 0; // snapshot HTTP status, when outcome == Snapshot
};

class CdxClient {
public:
    CdxClient(Transport& transport, std::string api_base = kDefaultCdxApi,
              int attempts = 3, int backoff_ms = 250);

    // Most recent capture of `url`. Timeouts and API 5xx responses retry
    // with backoff, then report LookupFailed — a distinct state from
    // NoCapture, so coverage is not silently biased down.
    CdxResult lookup(const std::string& url);

    std::string request_url(const std::string& url) const;

private:
    Transport& transport_;
    std::string api_base_;
    int attempts_;
    int backoff_ms_;
};

struct LiveCheckConfig {
    int max_redirects = 5;
    double rate = 4.0; // requests per second per host; politeness floor
    int workers = 1;
};

class LiveChecker {
public:
    LiveChecker(Transport& transport, LiveCheckConfig config);

    // HEAD, falling back to GET; redirects followed up to max_redirects;
    // the final response status is the verdict. 0 = unreachable.
    int check(const std::string& url);

    // Bounded-concurrency batch; results positionally match `urls`.
    std::vector<int> check_all(const std::vector<std::string>& urls);

private:
    void politeness_wait(const std::string& host);

    Transport& transport_;
    LiveCheckConfig config_;
    std::mutex mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> last_hit_;
};

struct WeblinkAudit {
    std::string url;
    std::string source_ident;
    std::optional<int> archive_status; // best snapshot status
    bool lookup_failed = false;
    std::optional<int> live_status;
    std::string checked_at;

    bool operator==(const WeblinkAudit&) const = default;
};

std::string audit_to_json_line(const WeblinkAudit& a);
WeblinkAudit audit_from_json_line(std::string_view line);

struct CoverageReport {
    uint64_t total = 0;
    uint64_t lookup_failed = 0;
    uint64_t archived_200 = 0;
    uint64_t archived_upper = 0; // 200 plus 3xx plus 5xx snapshots
    uint64_t live_checked = 0;
    uint64_t live_200 = 0;

    // Fractions over audits with a known archive outcome (lookup failures
    // are excluded from the denominator, not folded into "no capture").
    double preserved_strict() const;
    double preserved_upper() const;
    double live_ok() const;
};

CoverageReport coverage_report(LineSource& audits);
void write_coverage_tsv(const CoverageReport& r, LineSink& out);

struct AuditConfig {
    int live_sample = 0;     // 0 = skip live checking
    uint64_t sample_seed = 42;
    LiveCheckConfig live;
    std::function<std::string()> now_fn; // override for deterministic output
};

struct AuditStats {
    uint64_t refs = 0;
    uint64_t urls = 0;
    uint64_t unique_urls = 0;
    uint64_t lookup_failed = 0;
};

// Full offline-runnable audit: extract + cdx + optional live sample over the
// canonical reference stream; audits written as NDJSON.
AuditStats audit_references(LineSource& refs, CdxClient& cdx, Transport& live_transport,
                            LineSink& audits_out, const AuditConfig& config);

} // namespace refcat::weblinks
