#include "medrep/linalg.hpp"

namespace medrep {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace medrep
