#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace refcat {

enum class Codec { None, Gzip };

Codec codec_from_string(std::string_view name); // "none" | "gzip"
const char* to_string(Codec c);
// .gz path suffix selects gzip regardless of the configured codec.
Codec codec_for_path(const std::filesystem::path& p, Codec configured);
std::string extension_for(Codec c); // "" or ".gz"

// Pull-based line stream. Lines are returned without the trailing newline.
class LineSource {
public:
    virtual ~LineSource() = default;
    virtual bool next(std::string& line) = 0;
};

class LineSink {
public:
    virtual ~LineSink() = default;
    virtual void write(std::string_view line) = 0; // appends '\n'
    virtual void close() {}
};

// Plain or gzip file streams, chosen by extension.
std::unique_ptr<LineSource> open_line_source(const std::filesystem::path& p);
std::unique_ptr<LineSink> open_line_sink(const std::filesystem::path& p);

// In-memory streams for tests and group buffering.
class VectorLineSource final : public LineSource {
public:
    explicit VectorLineSource(std::vector<std::string> lines) : lines_(std::move(lines)) {}
    bool next(std::string& line) override {
        if (pos_ >= lines_.size()) return false;
        line = lines_[pos_++];
        return true;
    }

private:
    std::vector<std::string> lines_;
    size_t pos_ = 0;
};

class VectorLineSink final : public LineSink {
public:
    void write(std::string_view line) override { lines.emplace_back(line); }
    std::vector<std::string> lines;
};

// Concatenates several sources in order.
class CatLineSource final : public LineSource {
public:
    explicit CatLineSource(std::vector<std::unique_ptr<LineSource>> parts) : parts_(std::move(parts)) {}
    bool next(std::string& line) override;

private:
    std::vector<std::unique_ptr<LineSource>> parts_;
    size_t idx_ = 0;
};

std::unique_ptr<LineSource> open_cat_source(const std::vector<std::filesystem::path>& paths);

// Writes via a temporary file in the same directory, renamed into place on
// close. A crash mid-write never leaves a partial output at `target`.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path target);
    ~AtomicFileWriter();
    LineSink& sink() { return *sink_; }
    void commit();
    void abort();

private:
    std::filesystem::path target_;
    std::filesystem::path tmp_;
    std::unique_ptr<LineSink> sink_;
    bool done_ = false;
};

uint64_t file_size_or_zero(const std::filesystem::path& p);

} // namespace refcat
