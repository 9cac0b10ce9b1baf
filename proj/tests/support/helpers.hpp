#pragma once

#include <random>
#include <string>

#include "passivessh/record.hpp"
#include "passivessh/wire.hpp"

namespace pssh_test {

// Scripted bidirectional stream: read_some consumes `input`, write_all
// appends to `output`.
class MemStream final : public pssh::Stream {
 public:
  MemStream() = default;
  explicit MemStream(pssh::Bytes input) : input_(std::move(input)) {}

  std::size_t read_some(std::span<std::uint8_t> buf) override {
    std::size_t n = std::min(buf.size(), input_.size() - pos_);
    std::copy_n(input_.begin() + static_cast<std::ptrdiff_t>(pos_), n, buf.begin());
    pos_ += n;
    return n;
  }

  void write_all(std::span<const std::uint8_t> data) override {
    output_.insert(output_.end(), data.begin(), data.end());
  }

  void feed(std::span<const std::uint8_t> data) {
    input_.insert(input_.end(), data.begin(), data.end());
  }

  const pssh::Bytes& output() const { return output_; }

 private:
  pssh::Bytes input_;
  std::size_t pos_ = 0;
  pssh::Bytes output_;
};

struct FixtureKey {
  std::string advertised;  // algorithm name from the .pub file
  pssh::Bytes blob;
  std::string base64;
};

// Reads "<algorithm> <base64> [comment]" from tests/fixtures.
FixtureKey load_fixture_key(const std::string& filename);

// Deterministic random KEXINIT with plausible name-lists.
pssh::KexInitSummary random_kexinit(std::mt19937& rng);

// A consistent in-memory observation for datastore tests.
pssh::ScanRecord make_record(const std::string& host, std::uint16_t port, std::int64_t t,
                             const std::string& software, const std::vector<FixtureKey>& keys);

// Self-deleting scratch directory.
struct TempDir {
  std::string path;
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return path + "/" + name; }
};

}  // namespace pssh_test
