#pragma once

#include <filesystem>

#include "knowsite/optim.hpp"

namespace knowsite {

// Parameter blob: magic "KSPAR001", u32 count, then per parameter a
// length-prefixed name, u32 rank, u32 dims and row-major f64 data.
void save_parameters(const std::filesystem::path& path,
                     const num::ParameterStore& store);

// Loads by name into an already-constructed store; every stored parameter
// must exist with a matching shape.
void load_parameters(const std::filesystem::path& path,
                     num::ParameterStore& store);

}  // namespace knowsite
