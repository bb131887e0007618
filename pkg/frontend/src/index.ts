export { Rng } from "./rng";
export {
  GrayImage, addGaussianNoise, addSaltPepper, downsample, readGrayPng,
  rotate, standardize, translate, writeGrayPng,
} from "./image";
export { Dataset, Sample, byClass, loadDataset } from "./dataset";
export {
  AugmentationPolicy, AugmentedSample, DEFAULT_POLICY, augment,
} from "./augment";
export { DEFAULT_SPLIT, Split, SplitSpec, makeSplit } from "./split";
export {
  NetworkSpec, buildModel, defaultNetworkSpec, predictProba, toInputTensor,
} from "./model";
export { CurvePoint, TrainResult, train } from "./train";
export { Classifier, Evaluation, evaluate } from "./evaluate";
export { loadModel, saveModel } from "./io";
