public class FirstNegative {
    public static int main(String[] args) {
        int[] values = {4, 9, -3, 7, -8};
        int index = -1;
        int scanned = 0;
        for (int i = 0; i < values.length; i++) {
            scanned++;
            if (values[i] < 0) {
                index = i;
                break;
            }
        }
        int result;
        if (index >= 0) {
            result = index * 10;
        } else {
            result = -100;
        }
        return result;
    }
}
