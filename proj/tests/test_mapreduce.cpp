#include "refcat/mapreduce.h"
#include "refcat/synth.h"
#include "refcat/tsv.h"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace refcat;

namespace {

std::filesystem::path temp_dir(const char* leaf) {
    auto dir = std::filesystem::temp_directory_path() / "refcat-mr-test" / leaf;
    std::filesystem::create_directories(dir);
    return dir;
}

mr::SortSpec small_spec(const char* leaf) {
    mr::SortSpec spec;
    spec.memory_budget = mr::kMinSortBudget;
    spec.tmp_dir = temp_dir(leaf);
    spec.codec = Codec::None;
    return spec;
}

// In-memory oracle for sort order: key bytes, then full line.
std::vector<std::string> oracle_sort(std::vector<std::string> lines) {
    std::sort(lines.begin(), lines.end(), [](const std::string& a, const std::string& b) {
        auto ka = tsv::key_of(a), kb = tsv::key_of(b);
        if (int c = ka.compare(kb); c != 0) return c < 0;
        return a < b;
    });
    return lines;
}

// Hash-based grouping oracle: key -> multiset of payloads.
std::map<std::string, std::multiset<std::string>> oracle_group(
    const std::vector<std::string>& lines) {
    std::map<std::string, std::multiset<std::string>> groups;
    for (const auto& l : lines)
        groups[std::string(tsv::key_of(l))].insert(std::string(tsv::rest_of(l)));
    return groups;
}

} // namespace

TEST_SUITE("mapreduce") {

TEST_CASE("map_to_tsv routes keyless records to the side channel") {
    VectorLineSource in({"alpha one", "beta two", "skip me"});
    VectorLineSink keyed, side;
    auto stats = mr::map_to_tsv(
        in,
        [](std::string_view rec) -> std::optional<std::string> {
            if (rec.rfind("skip", 0) == 0) return std::nullopt;
            return std::string(rec.substr(0, rec.find(' ')));
        },
        keyed, &side);
    CHECK(stats.lines_out == 2);
    CHECK(stats.skipped == 1);
    CHECK(keyed.lines == std::vector<std::string>{"alpha\talpha one", "beta\tbeta two"});
    CHECK(side.lines == std::vector<std::string>{"skip me"});
}

TEST_CASE("map_to_tsv escapes payload bytes round-trippably") {
    VectorLineSource in({"has\ttab and\nnewline"});
    VectorLineSink keyed;
    mr::map_to_tsv(
        in, [](std::string_view) -> std::optional<std::string> { return "k"; }, keyed);
    REQUIRE(keyed.lines.size() == 1);
    CHECK(keyed.lines[0].find('\n') == std::string::npos);
    CHECK(tsv::key_of(keyed.lines[0]) == "k");
    CHECK(tsv::unescape(tsv::rest_of(keyed.lines[0])) == "has\ttab and\nnewline");
}

TEST_CASE("map line count equals keyed count on random records") {
    auto lines = synth::random_keyed_lines(801, 10000, 5000);
    // Use the payload as the record; every record keyed.
    VectorLineSource in(lines);
    VectorLineSink keyed;
    auto stats = mr::map_to_tsv(
        in, [](std::string_view rec) -> std::optional<std::string> {
            return std::string(tsv::key_of(rec));
        },
        keyed);
    CHECK(stats.lines_out == lines.size());
    CHECK(keyed.lines.size() == lines.size());
}

TEST_CASE("parallel map kernel output matches serial reference") {
    auto lines = synth::random_keyed_lines(802, 20000, 999);
    auto key_fn = [](std::string_view rec) -> std::optional<std::string> {
        auto k = tsv::key_of(rec);
        if (k.size() % 7 == 0) return std::nullopt;
        return std::string(k);
    };
    VectorLineSource in1(lines), in2(lines);
    VectorLineSink serial_out, serial_side, par_out, par_side;
    auto s1 = mr::map_to_tsv(in1, key_fn, serial_out, &serial_side);
    auto s2 = mr::map_to_tsv_parallel(in2, key_fn, par_out, &par_side, 4);
    CHECK(s1.lines_out == s2.lines_out);
    CHECK(s1.skipped == s2.skipped);
    CHECK(serial_out.lines == par_out.lines);
    CHECK(serial_side.lines == par_side.lines);
}

TEST_CASE("in-memory sort path equals oracle") {
    auto lines = synth::random_keyed_lines(803, 5000, 50);
    VectorLineSource in(lines);
    VectorLineSink out;
    auto metrics = mr::external_sort(in, out, small_spec("inmem"));
    CHECK(metrics.lines == lines.size());
    CHECK(metrics.runs == 0); // fits in one buffer
    CHECK(out.lines == oracle_sort(lines));
}

TEST_CASE("already sorted input unchanged, empty input empty") {
    auto sorted = oracle_sort(synth::random_keyed_lines(804, 1000, 20));
    VectorLineSource in(sorted);
    VectorLineSink out;
    mr::external_sort(in, out, small_spec("sorted"));
    CHECK(out.lines == sorted);

    VectorLineSource empty_in(std::vector<std::string>{});
    VectorLineSink empty_out;
    auto metrics = mr::external_sort(empty_in, empty_out, small_spec("empty"));
    CHECK(metrics.lines == 0);
    CHECK(empty_out.lines.empty());
}

TEST_CASE("spilled runs merge to the oracle order") {
    auto lines = synth::random_keyed_lines(805, 30000, 200);
    VectorLineSource in(lines);
    VectorLineSink out;
    mr::SortSpec spec = small_spec("spill");
    // Tiny unchecked budget to force many runs through the merge path.
    auto metrics = mr::detail::sort_with_budget(in, out, spec, 64 << 10);
    CHECK(metrics.runs > 4);
    CHECK(metrics.peak_buffer_bytes <= (64 << 10) + 512);
    CHECK(out.lines == oracle_sort(lines));
}

TEST_CASE("budget floor enforced") {
    mr::SortSpec spec = small_spec("floor");
    spec.memory_budget = 1 << 20;
    VectorLineSource in(std::vector<std::string>{"a\tb"});
    VectorLineSink out;
    CHECK_THROWS_AS(mr::external_sort(in, out, spec), std::invalid_argument);
}

TEST_CASE("parallel run sort kernel equals serial kernel") {
    auto lines = synth::random_keyed_lines(806, 50000, 333);
    auto serial = lines;
    mr::detail::sort_run_serial(serial, true);
    auto parallel = lines;
    mr::detail::sort_run_parallel(parallel, true, 4);
    CHECK(serial == parallel);
    CHECK(serial == oracle_sort(lines));
}

TEST_CASE("stable flag orders equal keys by full line") {
    std::vector<std::string> lines = {"k\tzz", "k\taa", "k\tmm"};
    VectorLineSource in(lines);
    VectorLineSink out;
    mr::external_sort(in, out, small_spec("stable"));
    CHECK(out.lines == std::vector<std::string>{"k\taa", "k\tmm", "k\tzz"});
}

TEST_CASE("two sorts of identical input are byte-identical") {
    auto lines = synth::random_keyed_lines(807, 20000, 100);
    std::vector<std::string> first, second;
    for (auto* target : {&first, &second}) {
        VectorLineSource in(lines);
        VectorLineSink out;
        mr::detail::sort_with_budget(in, out, small_spec("determinism"), 128 << 10);
        *target = out.lines;
    }
    CHECK(first == second);
}

TEST_CASE("group_reduce invokes once per key with full group") {
    VectorLineSource in({"a\t1", "a\t2", "b\t3"});
    VectorLineSink out;
    std::vector<std::pair<std::string, int>> seen;
    auto stats = mr::group_reduce(
        in,
        [&](std::string_view key, mr::GroupCursor& group, LineSink&) {
            int n = 0;
            std::string_view rest;
            while (group.next(rest)) ++n;
            seen.emplace_back(std::string(key), n);
        },
        out);
    CHECK(stats.groups == 2);
    CHECK(stats.lines == 3);
    CHECK(seen == std::vector<std::pair<std::string, int>>{{"a", 2}, {"b", 1}});
}

TEST_CASE("identity reduce reproduces the input") {
    auto lines = oracle_sort(synth::random_keyed_lines(808, 3000, 40));
    VectorLineSource in(lines);
    VectorLineSink out;
    mr::group_reduce(
        in,
        [](std::string_view key, mr::GroupCursor& group, LineSink& sink) {
            std::string_view rest;
            while (group.next(rest)) sink.write(std::string(key) + "\t" + std::string(rest));
        },
        out);
    CHECK(out.lines == lines);
}

TEST_CASE("sort plus group equals hash grouping oracle on random lines") {
    auto lines = synth::random_keyed_lines(809, 10000, 123);
    auto expected = oracle_group(lines);

    VectorLineSource in(lines);
    VectorLineSink sorted;
    mr::detail::sort_with_budget(in, sorted, small_spec("groupfuzz"), 256 << 10);

    std::map<std::string, std::multiset<std::string>> got;
    VectorLineSource sorted_in(sorted.lines);
    VectorLineSink ignored;
    mr::group_reduce(
        sorted_in,
        [&](std::string_view key, mr::GroupCursor& group, LineSink&) {
            auto& bucket = got[std::string(key)];
            std::string_view rest;
            while (group.next(rest)) bucket.insert(std::string(rest));
        },
        ignored);
    CHECK(got == expected);
}

TEST_CASE("reducer failure skips the group and continues") {
    VectorLineSource in({"a\t1", "boom\tx", "boom\ty", "c\t2"});
    VectorLineSink out;
    auto stats = mr::group_reduce(
        in,
        [](std::string_view key, mr::GroupCursor& group, LineSink& sink) {
            std::string_view rest;
            if (key == "boom") {
                group.next(rest);
                throw std::runtime_error("bad group");
            }
            while (group.next(rest)) sink.write(std::string(key) + "\t" + std::string(rest));
        },
        out);
    CHECK(stats.failed_groups == 1);
    CHECK(stats.groups == 3);
    CHECK(stats.lines == 4);
    CHECK(out.lines == std::vector<std::string>{"a\t1", "c\t2"});
}

TEST_CASE("parallel group runner output is byte-identical to serial") {
    auto lines = oracle_sort(synth::random_keyed_lines(810, 20000, 500));
    mr::Reducer reducer = [](std::string_view key, mr::GroupCursor& group, LineSink& sink) {
        uint64_t n = 0, bytes = 0;
        std::string_view rest;
        while (group.next(rest)) {
            ++n;
            bytes += rest.size();
        }
        sink.write(std::string(key) + "\t" + std::to_string(n) + "\t" + std::to_string(bytes));
    };
    VectorLineSource in1(lines), in2(lines);
    VectorLineSink serial, parallel;
    auto s1 = mr::group_reduce(in1, reducer, serial);
    auto s2 = mr::group_reduce_parallel(in2, reducer, parallel, 4, 1 << 16);
    CHECK(s1.groups == s2.groups);
    CHECK(s1.lines == s2.lines);
    CHECK(serial.lines == parallel.lines);
}

} // TEST_SUITE
