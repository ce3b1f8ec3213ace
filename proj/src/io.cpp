#include "refcat/io.h"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace refcat {

namespace {

bool has_gz_suffix(const std::filesystem::path& p) {
    return p.extension() == ".gz";
}

class PlainLineSource final : public LineSource {
public:
    explicit PlainLineSource(const std::filesystem::path& p) : in_(p, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + p.string());
    }
    bool next(std::string& line) override {
        if (!std::getline(in_, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

private:
    std::ifstream in_;
};

class PlainLineSink final : public LineSink {
public:
    explicit PlainLineSink(const std::filesystem::path& p) : out_(p, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + p.string());
    }
    void write(std::string_view line) override {
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.put('\n');
        if (!out_) throw std::runtime_error("write failed");
    }
    void close() override {
        out_.flush();
        if (!out_) throw std::runtime_error("flush failed");
        out_.close();
    }

private:
    std::ofstream out_;
};

class GzipLineSource final : public LineSource {
public:
    explicit GzipLineSource(const std::filesystem::path& p) {
        f_ = gzopen(p.string().c_str(), "rb");
        if (!f_) throw std::runtime_error("cannot open for reading: " + p.string());
        gzbuffer(f_, 1 << 17);
    }
    ~GzipLineSource() override {
        if (f_) gzclose(f_);
    }
    bool next(std::string& line) override {
        line.clear();
        while (true) {
            if (pos_ == len_) {
                int n = gzread(f_, buf_, sizeof buf_);
                if (n < 0) throw std::runtime_error("gzread failed");
                if (n == 0) return !line.empty(); // final line may lack '\n'
                pos_ = 0;
                len_ = static_cast<size_t>(n);
            }
            while (pos_ < len_) {
                char c = buf_[pos_++];
                if (c == '\n') {
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    return true;
                }
                line += c;
            }
        }
    }

private:
    gzFile f_ = nullptr;
    char buf_[1 << 16];
    size_t pos_ = 0, len_ = 0;
};

class GzipLineSink final : public LineSink {
public:
    explicit GzipLineSink(const std::filesystem::path& p) {
        f_ = gzopen(p.string().c_str(), "wb");
        if (!f_) throw std::runtime_error("cannot open for writing: " + p.string());
        gzbuffer(f_, 1 << 17);
    }
    ~GzipLineSink() override {
        if (f_) gzclose(f_);
    }
    void write(std::string_view line) override {
        if (!line.empty() &&
            gzwrite(f_, line.data(), static_cast<unsigned>(line.size())) !=
                static_cast<int>(line.size()))
            throw std::runtime_error("gzwrite failed");
        if (gzwrite(f_, "\n", 1) != 1) throw std::runtime_error("gzwrite failed");
    }
    void close() override {
        if (f_ && gzclose(f_) != Z_OK) {
            f_ = nullptr;
            throw std::runtime_error("gzclose failed");
        }
        f_ = nullptr;
    }

private:
    gzFile f_ = nullptr;
};

} // namespace

Codec codec_from_string(std::string_view name) {
    if (name == "none" || name.empty()) return Codec::None;
    if (name == "gzip" || name == "gz") return Codec::Gzip;
    throw std::invalid_argument("unknown codec: " + std::string(name));
}

const char* to_string(Codec c) {
    return c == Codec::Gzip ? "gzip" : "none";
}

Codec codec_for_path(const std::filesystem::path& p, Codec configured) {
    if (has_gz_suffix(p)) return Codec::Gzip;
    return configured;
}

std::string extension_for(Codec c) {
    return c == Codec::Gzip ? ".gz" : "";
}

std::unique_ptr<LineSource> open_line_source(const std::filesystem::path& p) {
    if (has_gz_suffix(p)) return std::make_unique<GzipLineSource>(p);
    return std::make_unique<PlainLineSource>(p);
}

std::unique_ptr<LineSink> open_line_sink(const std::filesystem::path& p) {
    if (has_gz_suffix(p)) return std::make_unique<GzipLineSink>(p);
    return std::make_unique<PlainLineSink>(p);
}

bool CatLineSource::next(std::string& line) {
    while (idx_ < parts_.size()) {
        if (parts_[idx_]->next(line)) return true;
        ++idx_;
    }
    return false;
}

std::unique_ptr<LineSource> open_cat_source(const std::vector<std::filesystem::path>& paths) {
    std::vector<std::unique_ptr<LineSource>> parts;
    parts.reserve(paths.size());
    for (const auto& p : paths) parts.push_back(open_line_source(p));
    return std::make_unique<CatLineSource>(std::move(parts));
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path target) : target_(std::move(target)) {
    std::random_device rd;
    tmp_ = target_;
    tmp_ += ".tmp-" + std::to_string(rd() % 1000000);
    if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
    sink_ = open_line_sink(tmp_);
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!done_) abort();
}

void AtomicFileWriter::commit() {
    if (done_) return;
    sink_->close();
    std::filesystem::rename(tmp_, target_);
    done_ = true;
}

void AtomicFileWriter::abort() {
    if (done_) return;
    sink_.reset();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
    done_ = true;
}

uint64_t file_size_or_zero(const std::filesystem::path& p) {
    std::error_code ec;
    auto n = std::filesystem::file_size(p, ec);
    return ec ? 0 : static_cast<uint64_t>(n);
}

} // namespace refcat
