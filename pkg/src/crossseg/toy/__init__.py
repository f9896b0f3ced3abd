from .features import N_FEATURES, extract_features
from .model import (ToyModel, forward, init_model, load_checkpoint,
                    save_checkpoint)
from .synth import Sample, SyntheticSpec, generate_corpus
from .train import (PreparedSample, Prediction, StageConfig, TrainConfig,
                    evaluate_model, predict, prepare_dataset,
                    score_loss_and_grads, seg_loss_and_grads,
                    train_score_stage, train_segmentation_stage)
