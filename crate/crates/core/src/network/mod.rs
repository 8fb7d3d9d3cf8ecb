mod adam;
mod cell;
mod gradcheck;
mod io;
mod model;
mod params;
mod train;

pub use adam::{adam_step, AdamState};
pub use cell::{cell_step, CellState};
pub use gradcheck::{gradcheck, relative_error, GradcheckConfig, GradcheckReport};
pub use io::{load_model, model_from_str, model_to_string, save_model, SavedModel, MODEL_FORMAT, MODEL_VERSION};
pub use model::{
    backward, backward_into, batch_loss_and_grad, dataset_loss, forward, loss, loss_grad, predict, LossGrad,
    LossParts, Prediction, Tape,
};
pub use params::{param_count_for, GateParams, HeadParams, ModelParams, ParamCount, ParamGrads, TENSOR_NAMES};
pub use train::{init_params, train, train_from, TrainConfig, TrainOutcome};
