#ifndef AQE_MANIFEST_HPP
#define AQE_MANIFEST_HPP

#include <filesystem>
#include <memory>

#include "aqe/catalog.hpp"

namespace aqe {

inline constexpr const char* kManifestName = "MANIFEST";
inline constexpr int kManifestVersion = 1;

/// Writes pending blocks, per-object sidecars and `<root>/MANIFEST`.
void persist_manifest(Catalog& catalog);

/// Loads `<catalog.root()>/MANIFEST` into an empty catalog, verifying every
/// block and sidecar checksum.
void load_manifest_into(Catalog& catalog);

/// Opens the catalog rooted at `root`.
std::unique_ptr<Catalog> load_manifest(const std::filesystem::path& root);

}  // namespace aqe

#endif  // AQE_MANIFEST_HPP
