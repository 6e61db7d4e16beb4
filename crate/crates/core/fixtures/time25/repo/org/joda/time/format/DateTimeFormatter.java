package org.joda.time.format;

import org.joda.time.DateTime;
import org.joda.time.DateTimeZone;

public class DateTimeFormatter {

    private final DateTimeZone iZone;

    public DateTimeFormatter(DateTimeZone zone) {
        iZone = zone;
    }

    public DateTimeFormatter withZone(DateTimeZone zone) {
        if (iZone == zone) {
            return this;
        }
        return new DateTimeFormatter(zone);
    }

    public String print(DateTime instant) {
        return instant.withZone(iZone).toString();
    }

    public DateTime parseDateTime(String text) {
        long millis = Long.parseLong(text.trim());
        return new DateTime(millis, iZone);
    }
}
