#include "nonconv/rng.hpp"

namespace nonconv {

static_assert(mix64(0) == 0);
static_assert(to_unit(~std::uint64_t{0}) < 1.0);

}  // namespace nonconv
