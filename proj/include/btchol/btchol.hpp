#pragma once

#include "btchol/block_sparse.hpp"
#include "btchol/block_tridiag.hpp"
#include "btchol/cost_model.hpp"
#include "btchol/dense_block.hpp"
#include "btchol/error.hpp"
#include "btchol/etree.hpp"
#include "btchol/flop_meter.hpp"
#include "btchol/io.hpp"
#include "btchol/kernels.hpp"
#include "btchol/multi_stage.hpp"
#include "btchol/partition.hpp"
#include "btchol/permutation.hpp"
#include "btchol/probgen.hpp"
#include "btchol/schedule/executor.hpp"
#include "btchol/schedule/scheduler.hpp"
#include "btchol/schedule/task_graph.hpp"
#include "btchol/schedule/workers.hpp"
#include "btchol/seqfactor.hpp"
#include "btchol/single_stage.hpp"
#include "btchol/stage_program.hpp"
