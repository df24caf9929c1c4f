#include "mlc/errors.hpp"
