#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spellscope {

/// What counts as one string of the corpus.
enum class Granularity : std::uint8_t {
  Line,       // newline-delimited
  Paragraph,  // blank-line delimited; lines inside joined with '\n'
  Document,   // the whole stream
};

std::string_view to_string(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view s);

class RecordStream {
 public:
  virtual ~RecordStream() = default;
  /// False at end of stream. Throws Error(Io) on read failure.
  virtual bool next(std::string& record) = 0;
  /// Number of records returned so far.
  virtual std::uint64_t position() const = 0;
};

/// Plain or gzip text; compression is detected from the content. "-" reads stdin.
std::unique_ptr<RecordStream> open_records(const std::filesystem::path& path,
                                           Granularity granularity = Granularity::Line);

/// Splits an in-memory buffer with the same rules as the file reader.
std::unique_ptr<RecordStream> memory_records(std::string text,
                                             Granularity granularity = Granularity::Line);

/// Yields the given records verbatim.
class VectorRecordStream final : public RecordStream {
 public:
  explicit VectorRecordStream(std::vector<std::string> records) : records_(std::move(records)) {}
  bool next(std::string& record) override;
  std::uint64_t position() const override { return pos_; }

 private:
  std::vector<std::string> records_;
  std::size_t pos_ = 0;
};

class RecordWriter {
 public:
  virtual ~RecordWriter() = default;
  /// Writes the record followed by '\n'.
  virtual void write(std::string_view record) = 0;
  virtual void close() = 0;
};

/// gzip when the path ends in ".gz" (header without timestamp), otherwise
/// plain text. "-" writes stdout.
std::unique_ptr<RecordWriter> create_writer(const std::filesystem::path& path);

/// Collects records in memory.
class VectorRecordWriter final : public RecordWriter {
 public:
  void write(std::string_view record) override { records.emplace_back(record); }
  void close() override {}
  std::vector<std::string> records;
};

/// Whole file as a string. Throws Error(Io).
std::string read_file(const std::filesystem::path& path);
/// Replaces the file atomically via a sibling temporary. Throws Error(Io).
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace spellscope
