#pragma once

#include "skelaug/boundary.hpp"
#include "skelaug/corpus.hpp"
#include "skelaug/diversity.hpp"
#include "skelaug/error.hpp"
#include "skelaug/kmeans.hpp"
#include "skelaug/ntu.hpp"
#include "skelaug/pipeline.hpp"
#include "skelaug/random.hpp"
#include "skelaug/skeleton.hpp"
#include "skelaug/synthetic.hpp"
#include "skelaug/transforms.hpp"
