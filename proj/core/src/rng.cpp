#include "gcil/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace gcil {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream is(text);
  std::mt19937_64 engine;
  is >> engine;
  if (is.fail()) throw std::invalid_argument("malformed generator state");
  engine_ = engine;
}

}  // namespace gcil
