/**
 * Wire protocol types for the gateway WebSocket, mirroring the shared
 * contract in src/fetchbot/data/protocol.schema.json. Outgoing commands
 * are validated before sending so the UI can never emit a message type
 * the gateway does not understand.
 */

import { z } from "zod";

export const Pose2DSchema = z
  .object({ x: z.number(), y: z.number(), theta: z.number() })
  .strict();
export type Pose2D = z.infer<typeof Pose2DSchema>;

// ---- client -> server ----

export const FetchCommand = z.object({ type: z.literal("fetch"), object: z.string() }).strict();
export const SayCommand = z.object({ type: z.literal("say"), text: z.string() }).strict();
export const AddObstacleCommand = z
  .object({
    type: z.literal("add_obstacle"),
    x: z.number(),
    y: z.number(),
    r: z.number().positive().optional(),
    vx: z.number().optional(),
    vy: z.number().optional(),
  })
  .strict();
export const TugCommand = z.object({ type: z.literal("tug"), f_z: z.number() }).strict();
export const EstopCommand = z.object({ type: z.literal("estop") }).strict();
export const ResetCommand = z.object({ type: z.literal("reset") }).strict();
export const SetPoseCommand = z
  .object({
    type: z.literal("set_pose"),
    x: z.number(),
    y: z.number(),
    theta: z.number().optional(),
  })
  .strict();

export const ClientCommandSchema = z.discriminatedUnion("type", [
  FetchCommand,
  SayCommand,
  AddObstacleCommand,
  TugCommand,
  EstopCommand,
  ResetCommand,
  SetPoseCommand,
]);
export type ClientCommand = z.infer<typeof ClientCommandSchema>;

export const COMMAND_TYPES = [
  "fetch",
  "say",
  "add_obstacle",
  "tug",
  "estop",
  "reset",
  "set_pose",
] as const;

// ---- server -> client ----

export const MapMetaSchema = z
  .object({
    resolution: z.number().positive(),
    origin: z.tuple([z.number(), z.number(), z.number()]),
    width: z.number().int().positive(),
    height: z.number().int().positive(),
    data: z.string(),
  })
  .strict();
export type MapMeta = z.infer<typeof MapMetaSchema>;

export const HelloSchema = z
  .object({
    type: z.literal("hello"),
    map: MapMetaSchema,
    config: z
      .object({
        name: z.string(),
        seed: z.number().int(),
        objects: z.array(z.string()),
        footprint: z.array(z.tuple([z.number(), z.number()])).optional(),
        tick_dt: z.number().optional(),
      })
      .strict(),
  })
  .strict();
export type Hello = z.infer<typeof HelloSchema>;

export const ROBOT_STATES = [
  "Idle",
  "Identifying",
  "Listening",
  "NavigatingToWarehouse",
  "LocatingObject",
  "Grasping",
  "NavigatingToUser",
  "Handover",
  "Recovery",
  "EStopped",
] as const;

export const SnapshotSchema = z
  .object({
    type: z.literal("snapshot"),
    seq: z.number().int().min(1),
    tick: z.number().int().min(0),
    state: z.enum(ROBOT_STATES),
    pose: Pose2DSchema,
    particles_summary: z
      .object({
        mean: Pose2DSchema,
        std: z.object({ x: z.number(), y: z.number() }).strict(),
        sample: z.array(z.tuple([z.number(), z.number()])),
      })
      .strict(),
    trajectory: z.array(z.tuple([z.number(), z.number()])),
    obstacles: z.array(
      z
        .object({
          x: z.number(),
          y: z.number(),
          r: z.number(),
          vx: z.number().optional(),
          vy: z.number().optional(),
        })
        .strict()
    ),
    arm_q: z
      .object({
        left: z.array(z.number()).length(7),
        right: z.array(z.number()).length(7),
      })
      .strict(),
    events: z.array(z.string()),
  })
  .strict();
export type Snapshot = z.infer<typeof SnapshotSchema>;

export const AckSchema = z.object({ type: z.literal("ack"), command: z.string() }).strict();
export const ErrorSchema = z.object({ type: z.literal("error"), message: z.string() }).strict();
export const EndSchema = z
  .object({
    type: z.literal("end"),
    completed: z.boolean(),
    final_state: z.string(),
    fault: z.string().nullable().optional(),
  })
  .strict();

export const ServerMessageSchema = z.discriminatedUnion("type", [
  HelloSchema,
  SnapshotSchema,
  AckSchema,
  ErrorSchema,
  EndSchema,
]);
export type ServerMessage = z.infer<typeof ServerMessageSchema>;

/** Validate and serialize an outgoing command; throws on anything that is
 * not part of the shared protocol. */
export function encodeCommand(cmd: ClientCommand): string {
  return JSON.stringify(ClientCommandSchema.parse(cmd));
}

export function decodeServerMessage(raw: string): ServerMessage {
  return ServerMessageSchema.parse(JSON.parse(raw));
}

/** Decode the hello map payload (base64, one byte per cell, row 0 at the
 * bottom) into a flat Uint8Array. */
export function decodeMapData(meta: MapMeta): Uint8Array {
  const binary = typeof atob === "function"
    ? atob(meta.data)
    : Buffer.from(meta.data, "base64").toString("binary");
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
  if (out.length !== meta.width * meta.height) {
    throw new Error(`map payload has ${out.length} cells, expected ${meta.width * meta.height}`);
  }
  return out;
}
