#ifndef ROIREG_ROIREG_HPP
#define ROIREG_ROIREG_HPP

#include "ablation.hpp"
#include "ddf_fit.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "interchange.hpp"
#include "metrics.hpp"
#include "roi_pipeline.hpp"
#include "synthetic.hpp"
#include "types.hpp"

#endif // ROIREG_ROIREG_HPP
