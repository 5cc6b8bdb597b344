#include "spellscope/record_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spellscope/common.hpp"

namespace spellscope {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::Line: return "line";
    case Granularity::Paragraph: return "paragraph";
    case Granularity::Document: return "document";
  }
  return "line";
}

std::optional<Granularity> parse_granularity(std::string_view s) {
  if (s == "line") return Granularity::Line;
  if (s == "paragraph") return Granularity::Paragraph;
  if (s == "document") return Granularity::Document;
  return std::nullopt;
}

bool VectorRecordStream::next(std::string& record) {
  if (pos_ >= records_.size()) return false;
  record = records_[pos_++];
  return true;
}

namespace {

bool is_blank(std::string_view line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

// Splits a byte source into records. Subclasses supply raw chunks.
class ChunkedRecordStream : public RecordStream {
 public:
  explicit ChunkedRecordStream(Granularity g) : granularity_(g) {}

  bool next(std::string& record) override {
    switch (granularity_) {
      case Granularity::Line:
        if (!next_line(record)) return false;
        break;
      case Granularity::Paragraph:
        if (!next_paragraph(record)) return false;
        break;
      case Granularity::Document:
        if (!next_document(record)) return false;
        break;
    }
    ++records_;
    return true;
  }

  std::uint64_t position() const override { return records_; }

 protected:
  // Returns bytes read, 0 at end. Throws on error.
  virtual std::size_t read_chunk(char* dst, std::size_t cap) = 0;

 private:
  bool fill() {
    if (eof_) return false;
    if (pos_ > 0) {
      buf_.erase(0, pos_);
      pos_ = 0;
    }
    const std::size_t old = buf_.size();
    buf_.resize(old + kChunk);
    const std::size_t got = read_chunk(buf_.data() + old, kChunk);
    buf_.resize(old + got);
    if (got == 0) eof_ = true;
    return got > 0;
  }

  bool next_line(std::string& line) {
    std::size_t scanned = pos_;
    for (;;) {
      const auto nl = buf_.find('\n', scanned);
      if (nl != std::string::npos) {
        line.assign(buf_, pos_, nl - pos_);
        pos_ = nl + 1;
        return true;
      }
      scanned = buf_.size();
      const std::size_t before = pos_;
      if (!fill()) {
        if (pos_ < buf_.size()) {
          line.assign(buf_, pos_, std::string::npos);
          pos_ = buf_.size();
          return true;
        }
        return false;
      }
      scanned -= before;
    }
  }

  bool next_paragraph(std::string& para) {
    para.clear();
    bool any = false;
    std::string line;
    while (next_line(line)) {
      if (is_blank(line)) {
        if (any) return true;
        continue;
      }
      if (any) para.push_back('\n');
      para += line;
      any = true;
    }
    return any;
  }

  bool next_document(std::string& doc) {
    if (done_document_) return false;
    while (fill()) {
    }
    done_document_ = true;
    if (buf_.size() == pos_) return false;
    doc.assign(buf_, pos_, std::string::npos);
    pos_ = buf_.size();
    return true;
  }

  static constexpr std::size_t kChunk = 1 << 16;
  Granularity granularity_;
  std::string buf_;
  std::size_t pos_ = 0;
  bool eof_ = false;
  bool done_document_ = false;
  std::uint64_t records_ = 0;
};

class GzRecordStream final : public ChunkedRecordStream {
 public:
  GzRecordStream(const std::filesystem::path& path, Granularity g)
      : ChunkedRecordStream(g), name_(path.string()) {
    file_ = name_ == "-" ? gzdopen(0, "rb") : gzopen(name_.c_str(), "rb");
    if (file_ == nullptr) throw Error(ErrorKind::Io, "cannot open " + name_);
    gzbuffer(file_, 1 << 17);
  }
  ~GzRecordStream() override {
    if (file_ != nullptr) gzclose(file_);
  }
  GzRecordStream(const GzRecordStream&) = delete;
  GzRecordStream& operator=(const GzRecordStream&) = delete;

 protected:
  std::size_t read_chunk(char* dst, std::size_t cap) override {
    const int got = gzread(file_, dst, static_cast<unsigned>(cap));
    if (got < 0) {
      int errnum = 0;
      const char* msg = gzerror(file_, &errnum);
      throw Error(ErrorKind::Io, "read failed on " + name_ + " after " +
                                     std::to_string(position()) + " records: " + msg);
    }
    return static_cast<std::size_t>(got);
  }

 private:
  std::string name_;
  gzFile file_ = nullptr;
};

class MemoryRecordStream final : public ChunkedRecordStream {
 public:
  MemoryRecordStream(std::string text, Granularity g)
      : ChunkedRecordStream(g), text_(std::move(text)) {}

 protected:
  std::size_t read_chunk(char* dst, std::size_t cap) override {
    const std::size_t n = std::min(cap, text_.size() - off_);
    text_.copy(dst, n, off_);
    off_ += n;
    return n;
  }

 private:
  std::string text_;
  std::size_t off_ = 0;
};

class GzWriter final : public RecordWriter {
 public:
  explicit GzWriter(const std::filesystem::path& path) : name_(path.string()) {
    file_ = gzopen(name_.c_str(), "wb");
    if (file_ == nullptr) throw Error(ErrorKind::Io, "cannot create " + name_);
  }
  ~GzWriter() override {
    if (file_ != nullptr) gzclose(file_);
  }
  GzWriter(const GzWriter&) = delete;
  GzWriter& operator=(const GzWriter&) = delete;

  void write(std::string_view record) override {
    if ((!record.empty() &&
         gzwrite(file_, record.data(), static_cast<unsigned>(record.size())) == 0) ||
        gzputc(file_, '\n') < 0) {
      throw Error(ErrorKind::Io, "write failed on " + name_);
    }
  }
  void close() override {
    if (file_ == nullptr) return;
    const int rc = gzclose(file_);
    file_ = nullptr;
    if (rc != Z_OK) throw Error(ErrorKind::Io, "close failed on " + name_);
  }

 private:
  std::string name_;
  gzFile file_ = nullptr;
};

class PlainWriter final : public RecordWriter {
 public:
  explicit PlainWriter(const std::filesystem::path& path) : name_(path.string()) {
    if (name_ == "-") {
      file_ = stdout;
      owned_ = false;
    } else {
      file_ = std::fopen(name_.c_str(), "wb");
    }
    if (file_ == nullptr) throw Error(ErrorKind::Io, "cannot create " + name_);
  }
  ~PlainWriter() override {
    if (file_ != nullptr && owned_) std::fclose(file_);
  }
  PlainWriter(const PlainWriter&) = delete;
  PlainWriter& operator=(const PlainWriter&) = delete;

  void write(std::string_view record) override {
    if (std::fwrite(record.data(), 1, record.size(), file_) != record.size() ||
        std::fputc('\n', file_) == EOF) {
      throw Error(ErrorKind::Io, "write failed on " + name_);
    }
  }
  void close() override {
    if (file_ == nullptr) return;
    const int rc = owned_ ? std::fclose(file_) : std::fflush(file_);
    file_ = nullptr;
    if (rc != 0) throw Error(ErrorKind::Io, "close failed on " + name_);
  }

 private:
  std::string name_;
  std::FILE* file_ = nullptr;
  bool owned_ = true;
};

}  // namespace

std::unique_ptr<RecordStream> open_records(const std::filesystem::path& path,
                                           Granularity granularity) {
  return std::make_unique<GzRecordStream>(path, granularity);
}

std::unique_ptr<RecordStream> memory_records(std::string text, Granularity granularity) {
  return std::make_unique<MemoryRecordStream>(std::move(text), granularity);
}

std::unique_ptr<RecordWriter> create_writer(const std::filesystem::path& path) {
  if (path.extension() == ".gz") return std::make_unique<GzWriter>(path);
  return std::make_unique<PlainWriter>(path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot create " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace spellscope
