/**
 * The tensor inventory the pyrdepth engine demands of a weight container
 * (default 6-level configuration), mirroring its published naming
 * convention: encoder{k}/conv{1|2}, decoder{k}/conv{1..4}, deconv{2..6}.
 */

export interface TensorSpec {
    name: string;
    shape: number[];
}

const ENCODER_CHANNELS = [16, 32, 64, 96, 128, 192];
const DECODER_CHANNELS = [96, 64, 32, 8];
const HANDOFF = 8;
export const LEVELS = 6;

export function requiredTensors(): TensorSpec[] {
    const specs: TensorSpec[] = [];
    for (let k = 1; k <= LEVELS; k++) {
        const cin = k === 1 ? 3 : ENCODER_CHANNELS[k - 2];
        const cout = ENCODER_CHANNELS[k - 1];
        specs.push({ name: `encoder${k}/conv1/kernel`, shape: [cout, cin, 3, 3] });
        specs.push({ name: `encoder${k}/conv1/bias`, shape: [cout] });
        specs.push({ name: `encoder${k}/conv2/kernel`, shape: [cout, cout, 3, 3] });
        specs.push({ name: `encoder${k}/conv2/bias`, shape: [cout] });
    }
    for (let k = 1; k <= LEVELS; k++) {
        let cin = k === LEVELS
            ? ENCODER_CHANNELS[LEVELS - 1]
            : ENCODER_CHANNELS[k - 1] + HANDOFF;
        DECODER_CHANNELS.forEach((cout, i) => {
            specs.push({ name: `decoder${k}/conv${i + 1}/kernel`,
                         shape: [cout, cin, 3, 3] });
            specs.push({ name: `decoder${k}/conv${i + 1}/bias`, shape: [cout] });
            cin = cout;
        });
    }
    for (let k = 2; k <= LEVELS; k++) {
        specs.push({ name: `deconv${k}/kernel`, shape: [HANDOFF, HANDOFF, 2, 2] });
        specs.push({ name: `deconv${k}/bias`, shape: [HANDOFF] });
    }
    return specs;
}

export function totalParams(specs: TensorSpec[]): number {
    return specs.reduce(
        (sum, s) => sum + s.shape.reduce((a, b) => a * b, 1), 0);
}
