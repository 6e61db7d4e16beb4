package org.joda.time.tz;

import org.joda.time.DateTimeZone;

/**
 * Improves the performance of requesting time zone offsets and name keys by
 * caching the results.
 */
public class CachedDateTimeZone extends DateTimeZone {

    private static final int cInfoCacheMask = 511;

    public static CachedDateTimeZone forZone(DateTimeZone zone) {
        if (zone instanceof CachedDateTimeZone) {
            return (CachedDateTimeZone) zone;
        }
        return new CachedDateTimeZone(zone);
    }

    private final DateTimeZone iZone;
    private final transient Info[] iInfoCache = new Info[cInfoCacheMask + 1];

    private CachedDateTimeZone(DateTimeZone zone) {
        super(zone.getID());
        iZone = zone;
    }

    public DateTimeZone getUncachedZone() {
        return iZone;
    }

    public int getOffset(long instant) {
        return getInfo(instant).getOffset(instant);
    }

    public int getStandardOffset(long instant) {
        return iZone.getStandardOffset(instant);
    }

    public boolean isFixed() {
        return iZone.isFixed();
    }

    public long nextTransition(long instant) {
        return iZone.nextTransition(instant);
    }

    public long previousTransition(long instant) {
        return iZone.previousTransition(instant);
    }

    private Info getInfo(long millis) {
        int period = (int) (millis >> 32);
        Info[] cache = iInfoCache;
        int index = period & cInfoCacheMask;
        Info info = cache[index];
        if (info == null || (int) ((info.iPeriodStart >> 32)) != period) {
            info = new Info(iZone, ((long) period) << 32);
            cache[index] = info;
        }
        return info;
    }

    private static final class Info {
        public final long iPeriodStart;
        public final DateTimeZone iZoneRef;
        private int iOffset = Integer.MIN_VALUE;

        Info(DateTimeZone zone, long periodStart) {
            iPeriodStart = periodStart;
            iZoneRef = zone;
        }

        public int getOffset(long millis) {
            if (iOffset == Integer.MIN_VALUE) {
                iOffset = iZoneRef.getOffset(iPeriodStart);
            }
            return iOffset;
        }
    }
}
