#include "promptaug/error.hpp"

namespace promptaug {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Backend: return 3;
    case ErrorKind::Data: return 4;
    }
    return 1;
}

} // namespace promptaug
