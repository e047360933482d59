#ifndef AQE_BLOCK_IO_HPP
#define AQE_BLOCK_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aqe/table.hpp"

namespace aqe {

/// Writes rows [begin, end) of `table` plus optional extra int64 columns
/// (same row indexing) to `path` and returns the file's FNV-1a checksum.
std::uint64_t write_block(const std::filesystem::path& path, const Table& table,
                          std::size_t begin, std::size_t end,
                          const std::vector<const std::vector<std::int64_t>*>& extra = {});

/// Appends the block's rows to `table` (and extras to `extra`) after
/// verifying the checksum. Throws kIo for a missing file, kCorrupt otherwise.
void read_block(const std::filesystem::path& path, std::uint64_t expected_checksum, Table& table,
                const std::vector<std::vector<std::int64_t>*>& extra = {});

std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace aqe

#endif  // AQE_BLOCK_IO_HPP
